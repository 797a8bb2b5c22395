#include "veriframe/net.hpp"

#include "veriframe/ledger/node.hpp"

#include <boost/asio.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <charconv>
#include <deque>
#include <map>
#include <thread>

namespace veriframe::net {

namespace asio = boost::asio;
using asio::ip::tcp;
using asio::ip::udp;
using boost::system::error_code;

namespace {

Bytes frame_op(std::uint8_t op, ByteView body)
{
  ByteWriter w(5 + body.size());
  w.u32(static_cast<std::uint32_t>(1 + body.size()));
  w.u8(op);
  w.bytes(body);
  return std::move(w).take();
}

std::uint32_t read_len(const std::array<std::uint8_t, 4>& b)
{
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

asio::ip::address parse_address(const std::string& host)
{
  if (host == "localhost")
  {
    return asio::ip::make_address("127.0.0.1");
  }
  error_code ec;
  auto a = asio::ip::make_address(host, ec);
  if (ec)
  {
    throw InvalidArgument("not a numeric IP address: '" + host + "'");
  }
  return a;
}

std::uint64_t now_us()
{
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::system_clock::now().time_since_epoch())
          .count());
}

void encode_hit(ByteWriter& w, const ledger::QueryHit& h)
{
  w.u64(h.height);
  w.u64(h.timestamp_us);
  w.u32(h.tx_index);
  h.record.encode_to(w);
}

} // namespace

Endpoint Endpoint::parse(std::string_view text)
{
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
  {
    throw InvalidArgument("expected host:port, got '" + std::string(text) + "'");
  }
  Endpoint e;
  e.host                 = std::string(text.substr(0, colon));
  const std::string_view p = text.substr(colon + 1);
  auto res                 = std::from_chars(p.data(), p.data() + p.size(), e.port);
  if (res.ec != std::errc{} || res.ptr != p.data() + p.size())
  {
    throw InvalidArgument("invalid port in '" + std::string(text) + "'");
  }
  return e;
}

std::string Endpoint::to_string() const { return host + ":" + std::to_string(port); }

// ---------------------------------------------------------------------------
// capture-side channels

struct TcpDigestChannel::Impl
{
  asio::io_context io;
  tcp::socket socket{io};
  Endpoint to;
};

TcpDigestChannel::TcpDigestChannel(const Endpoint& to, std::chrono::milliseconds connect_timeout)
  : impl_(std::make_unique<Impl>())
{
  impl_->to = to;
  const tcp::endpoint ep(parse_address(to.host), to.port);
  const auto deadline = std::chrono::steady_clock::now() + connect_timeout;
  for (;;)
  {
    error_code ec;
    impl_->socket.connect(ep, ec);
    if (!ec)
    {
      impl_->socket.set_option(tcp::no_delay(true));
      return;
    }
    impl_->socket.close();
    if (std::chrono::steady_clock::now() >= deadline)
    {
      throw IoError("cannot connect digest channel to " + to.to_string() + ": " + ec.message());
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
}

TcpDigestChannel::~TcpDigestChannel() = default;

void TcpDigestChannel::send(const wire::HashChannelMessage& msg)
{
  const Bytes framed = wire::frame_payload(wire::encode_message(msg));
  error_code ec;
  asio::write(impl_->socket, asio::buffer(framed), ec);
  if (ec)
  {
    throw IoError("digest channel to " + impl_->to.to_string() + ": " + ec.message());
  }
}

struct UdpFrameChannel::Impl
{
  asio::io_context io;
  udp::socket socket{io};
  udp::endpoint to;
  std::chrono::microseconds pace{};
};

UdpFrameChannel::UdpFrameChannel(const Endpoint& to, std::chrono::microseconds pace)
  : impl_(std::make_unique<Impl>())
{
  impl_->to   = udp::endpoint(parse_address(to.host), to.port);
  impl_->pace = pace;
  impl_->socket.open(impl_->to.protocol());
}

UdpFrameChannel::~UdpFrameChannel() = default;

void UdpFrameChannel::send(ByteView datagram)
{
  error_code ec;
  impl_->socket.send_to(asio::buffer(datagram.data(), datagram.size()), impl_->to, 0, ec);
  if (impl_->pace.count() > 0)
  {
    std::this_thread::sleep_for(impl_->pace);
  }
  if (ec)
  {
    throw IoError("frame channel: " + ec.message());
  }
}

// ---------------------------------------------------------------------------
// ingest

transport::IngestSummary run_ingest(const IngestOptions& options, transport::ArchiveSink& archive,
                                    ledger::LedgerSink& ledger)
{
  asio::io_context io;
  tcp::acceptor acceptor(io, tcp::endpoint(parse_address(options.hash_listen.host), options.hash_listen.port));
  udp::socket frames(io, udp::endpoint(parse_address(options.frame_listen.host), options.frame_listen.port));
  error_code ignored;
  frames.set_option(udp::socket::receive_buffer_size(16 << 20), ignored);
  if (options.on_listening)
  {
    options.on_listening(acceptor.local_endpoint().port(), frames.local_endpoint().port());
  }
  spdlog::info("ingest listening: digests tcp {}, frames udp {}", acceptor.local_endpoint().port(),
               frames.local_endpoint().port());

  transport::IngestState state(archive, ledger);
  tcp::socket hash_socket(io);
  asio::steady_timer window(io);
  asio::steady_timer accept_timer(io);
  bool closing       = false;
  bool accept_expired = false;

  auto begin_close = [&](const char* why) {
    if (closing)
    {
      return;
    }
    closing = true;
    spdlog::info("{}; holding the reconciliation window for {} ms", why, options.window.count());
    window.expires_after(options.window);
    window.async_wait([&](const error_code&) { io.stop(); });
  };

  std::array<std::uint8_t, 65536> dgram{};
  udp::endpoint sender;
  std::function<void()> receive_frame = [&] {
    frames.async_receive_from(asio::buffer(dgram), sender, [&](const error_code& ec, std::size_t n) {
      if (ec)
      {
        return;
      }
      state.on_datagram(ByteView(dgram.data(), n));
      receive_frame();
    });
  };

  wire::FrameDecoder decoder;
  std::array<std::uint8_t, 65536> chunk{};
  std::function<void()> read_digests = [&] {
    hash_socket.async_read_some(asio::buffer(chunk), [&](const error_code& ec, std::size_t n) {
      if (ec)
      {
        begin_close(state.end_of_stream_seen() ? "digest channel closed" : "digest channel lost before end of stream");
        return;
      }
      decoder.feed(ByteView(chunk.data(), n));
      try
      {
        while (auto payload = decoder.next())
        {
          state.on_hash_payload(*payload);
          if (state.end_of_stream_seen())
          {
            begin_close("end of stream");
          }
        }
      }
      catch (const ProtocolError& e)
      {
        spdlog::error("digest channel: {}", e.what());
        begin_close("digest channel protocol error");
        return;
      }
      read_digests();
    });
  };

  acceptor.async_accept(hash_socket, [&](const error_code& ec) {
    accept_timer.cancel();
    if (ec)
    {
      return;
    }
    spdlog::info("capture agent connected from {}", hash_socket.remote_endpoint(ignored).address().to_string());
    read_digests();
  });
  if (options.accept_timeout.count() > 0)
  {
    accept_timer.expires_after(options.accept_timeout);
    accept_timer.async_wait([&](const error_code& ec) {
      if (!ec)
      {
        accept_expired = true;
        io.stop();
      }
    });
  }
  receive_frame();
  io.run();

  if (accept_expired)
  {
    throw IoError("no capture agent connected within " + std::to_string(options.accept_timeout.count()) + " ms");
  }
  if (!state.announced())
  {
    throw ProtocolError("capture session ended before the stream was announced");
  }
  return state.close_window();
}

// ---------------------------------------------------------------------------
// ledger client

RemoteLedger::RemoteLedger(Endpoint node, std::chrono::milliseconds timeout)
  : node_(std::move(node))
  , timeout_(timeout)
{}

Bytes RemoteLedger::call(Op op, ByteView body) const
{
  asio::io_context io;
  tcp::socket socket(io);
  const Bytes request = frame_op(static_cast<std::uint8_t>(op), body);
  std::array<std::uint8_t, 4> len{};
  Bytes response;
  error_code result;
  bool done = false;

  const tcp::endpoint ep(parse_address(node_.host), node_.port);
  socket.async_connect(ep, [&](const error_code& ec) {
    if (ec)
    {
      result = ec;
      done   = true;
      return;
    }
    asio::async_write(socket, asio::buffer(request), [&](const error_code& ec, std::size_t) {
      if (ec)
      {
        result = ec;
        done   = true;
        return;
      }
      asio::async_read(socket, asio::buffer(len), [&](const error_code& ec, std::size_t) {
        const std::uint32_t n = read_len(len);
        if (ec || n == 0 || n > wire::kMaxMessageSize * 16)
        {
          result = ec ? ec : asio::error::make_error_code(asio::error::message_size);
          done   = true;
          return;
        }
        response.resize(n);
        asio::async_read(socket, asio::buffer(response), [&](const error_code& ec, std::size_t) {
          result = ec;
          done   = true;
        });
      });
    });
  });
  io.run_for(timeout_);
  if (!done)
  {
    throw IoError("ledger node " + node_.to_string() + " did not answer within " + std::to_string(timeout_.count()) +
                  " ms");
  }
  if (result)
  {
    throw IoError("ledger node " + node_.to_string() + ": " + result.message());
  }
  const std::uint8_t code = response[0];
  if (code == static_cast<std::uint8_t>(Op::error))
  {
    throw LedgerError("ledger node " + node_.to_string() + " refused: " + std::string(response.begin() + 1, response.end()));
  }
  if (code != (static_cast<std::uint8_t>(op) | kResponseBit))
  {
    throw ProtocolError("unexpected response opcode " + std::to_string(code));
  }
  return Bytes(response.begin() + 1, response.end());
}

void RemoteLedger::submit(const DigestRecord& record)
{
  const Bytes body = call(Op::submit_tx, record.encode());
  if (body.size() != 1)
  {
    throw ProtocolError("malformed SubmitTx response");
  }
  duplicate_ = body[0] != 0;
}

std::vector<ledger::QueryHit> RemoteLedger::query(const StreamId& stream_id, std::uint64_t frame_id) const
{
  ByteWriter w;
  w.bytes(stream_id);
  w.u64(frame_id);
  const Bytes body = call(Op::query_digest, w.data());
  try
  {
    ByteReader r(body);
    const std::uint32_t n = r.u32("hit count");
    std::vector<ledger::QueryHit> hits;
    for (std::uint32_t i = 0; i < n; ++i)
    {
      ledger::QueryHit h;
      h.height       = r.u64("height");
      h.timestamp_us = r.u64("timestamp");
      h.tx_index     = r.u32("tx index");
      h.record       = DigestRecord::decode(r);
      hits.push_back(std::move(h));
    }
    r.expect_end("query response");
    return hits;
  }
  catch (const ParseError& e)
  {
    throw ProtocolError(std::string("malformed QueryDigest response: ") + e.what());
  }
}

ChainInfo RemoteLedger::chain_info() const
{
  const Bytes body = call(Op::chain_info, {});
  try
  {
    ByteReader r(body);
    ChainInfo info;
    info.height   = r.u64("height");
    info.tip_hash = r.array<32>("tip hash");
    info.members  = r.u16("members");
    info.quorum   = r.u16("quorum");
    r.expect_end("chain info");
    return info;
  }
  catch (const ParseError& e)
  {
    throw ProtocolError(std::string("malformed ChainInfo response: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// ledger node

namespace {

/// Outbound connection to one peer. Messages queued while the link is down
/// are dropped when the connection attempt fails.
class PeerLink : public std::enable_shared_from_this<PeerLink>
{
public:
  PeerLink(asio::io_context& io, tcp::endpoint to)
    : socket_(io)
    , to_(to)
  {}

  void send(Bytes framed)
  {
    if (queue_.size() >= 4096)
    {
      queue_.pop_front();
    }
    queue_.push_back(std::move(framed));
    if (connected_)
    {
      if (!writing_)
      {
        write_next();
      }
    }
    else if (!connecting_)
    {
      connect();
    }
  }

  void close()
  {
    error_code ignored;
    socket_.close(ignored);
  }

private:
  void connect()
  {
    connecting_ = true;
    socket_.async_connect(to_, [self = shared_from_this()](const error_code& ec) {
      self->connecting_ = false;
      if (ec)
      {
        spdlog::debug("peer {} unreachable: {}", self->to_.port(), ec.message());
        self->queue_.clear();
        self->close();
        return;
      }
      error_code ignored;
      self->socket_.set_option(tcp::no_delay(true), ignored);
      self->connected_ = true;
      self->write_next();
    });
  }

  void write_next()
  {
    if (queue_.empty())
    {
      return;
    }
    writing_ = true;
    asio::async_write(socket_, asio::buffer(queue_.front()), [self = shared_from_this()](const error_code& ec, std::size_t) {
      self->writing_ = false;
      if (ec)
      {
        self->connected_ = false;
        self->queue_.clear();
        self->close();
        return;
      }
      self->queue_.pop_front();
      self->write_next();
    });
  }

  tcp::socket socket_;
  tcp::endpoint to_;
  std::deque<Bytes> queue_;
  bool connected_  = false;
  bool connecting_ = false;
  bool writing_    = false;
};

} // namespace

struct LedgerServer::Impl
{
  Impl(ledger::ClusterConfig cfg, ledger::NodeId node_id, SigningKey key, std::optional<std::filesystem::path> chain)
    : config(std::move(cfg))
    , id(node_id)
    , node(node_id, std::move(key),
           chain ? ledger::BlockStore::open(*chain, config) : ledger::BlockStore::in_memory(config))
    , acceptor(io)
    , tick(io)
    , round_timer(io)
  {
    const ledger::Member* me = config.member(id);
    if (me == nullptr)
    {
      throw InvalidArgument("node " + std::to_string(id) + " is not in the cluster config");
    }
    const Endpoint ep = Endpoint::parse(me->address);
    const tcp::endpoint listen(parse_address(ep.host), ep.port);
    acceptor.open(listen.protocol());
    acceptor.set_option(tcp::acceptor::reuse_address(true));
    error_code ec;
    acceptor.bind(listen, ec);
    if (ec)
    {
      throw IoError("cannot listen on " + me->address + ": " + ec.message());
    }
    acceptor.listen();
    for (const auto& m : config.members)
    {
      if (m.id != id)
      {
        const Endpoint pe = Endpoint::parse(m.address);
        peers[m.id]       = std::make_shared<PeerLink>(io, tcp::endpoint(parse_address(pe.host), pe.port));
      }
    }
    height = node.store().height();
  }

  class Session : public std::enable_shared_from_this<Session>
  {
  public:
    Session(tcp::socket s, Impl& server)
      : socket_(std::move(s))
      , server_(server)
    {}

    void start() { read_header(); }

  private:
    void read_header()
    {
      asio::async_read(socket_, asio::buffer(len_), [self = shared_from_this()](const error_code& ec, std::size_t) {
        if (ec)
        {
          return;
        }
        const std::uint32_t n = read_len(self->len_);
        if (n == 0 || n > 16 * wire::kMaxMessageSize)
        {
          spdlog::warn("dropping connection: frame length {}", n);
          return;
        }
        self->body_.resize(n);
        self->read_body();
      });
    }

    void read_body()
    {
      asio::async_read(socket_, asio::buffer(body_), [self = shared_from_this()](const error_code& ec, std::size_t) {
        if (ec)
        {
          return;
        }
        if (auto reply = self->server_.handle(self->body_))
        {
          self->reply_ = std::move(*reply);
          asio::async_write(self->socket_, asio::buffer(self->reply_),
                            [self](const error_code& ec, std::size_t) {
                              if (!ec)
                              {
                                self->read_header();
                              }
                            });
        }
        else
        {
          self->read_header();
        }
      });
    }

    tcp::socket socket_;
    Impl& server_;
    std::array<std::uint8_t, 4> len_{};
    Bytes body_;
    Bytes reply_;
  };

  void accept()
  {
    acceptor.async_accept([this](const error_code& ec, tcp::socket s) {
      if (ec)
      {
        return;
      }
      std::make_shared<Session>(std::move(s), *this)->start();
      accept();
    });
  }

  std::optional<Bytes> handle(ByteView payload)
  {
    const std::uint8_t op = payload[0];
    ByteReader r(payload.subspan(1), 1);
    try
    {
      switch (static_cast<Op>(op))
      {
      case Op::submit_tx: {
        DigestRecord rec = DigestRecord::decode(r);
        r.expect_end("SubmitTx");
        const bool added = node.submit(rec, now_us());
        if (added)
        {
          const Bytes gossip = frame_op(static_cast<std::uint8_t>(Op::tx_gossip), rec.encode());
          for (auto& [pid, link] : peers)
          {
            link->send(gossip);
          }
        }
        const std::uint8_t status = added ? 0 : 1;
        return frame_op(op | kResponseBit, ByteView(&status, 1));
      }
      case Op::query_digest: {
        const StreamId sid = r.array<16>("stream id");
        const std::uint64_t frame = r.u64("frame id");
        r.expect_end("QueryDigest");
        const auto hits = node.store().query(sid, frame);
        ByteWriter w;
        w.u32(static_cast<std::uint32_t>(hits.size()));
        for (const auto& h : hits)
        {
          encode_hit(w, h);
        }
        return frame_op(op | kResponseBit, w.data());
      }
      case Op::chain_info: {
        ByteWriter w;
        w.u64(node.store().height());
        w.bytes(node.store().tip_hash());
        w.u16(static_cast<std::uint16_t>(config.n()));
        w.u16(static_cast<std::uint16_t>(config.quorum()));
        return frame_op(op | kResponseBit, w.data());
      }
      case Op::consensus: {
        const ledger::NodeId from = r.u16("sender");
        const auto msg            = ledger::decode_consensus(payload.subspan(3));
        on_consensus(from, msg);
        return std::nullopt;
      }
      case Op::tx_gossip: {
        DigestRecord rec = DigestRecord::decode(r);
        r.expect_end("TxGossip");
        node.submit(rec, now_us());
        return std::nullopt;
      }
      default:
        break;
      }
      throw ProtocolError("unknown opcode " + std::to_string(op));
    }
    catch (const Error& e)
    {
      if (op == static_cast<std::uint8_t>(Op::consensus) || op == static_cast<std::uint8_t>(Op::tx_gossip))
      {
        spdlog::warn("node {}: bad peer message: {}", id, e.what());
        return std::nullopt;
      }
      const std::string what = e.what();
      return frame_op(static_cast<std::uint8_t>(Op::error), as_bytes(what));
    }
  }

  void send(const std::vector<ledger::Outgoing>& outs)
  {
    for (const auto& o : outs)
    {
      auto it = peers.find(o.to);
      if (it == peers.end())
      {
        continue;
      }
      ByteWriter w;
      w.u16(id);
      w.bytes(ledger::encode_consensus(o.message));
      it->second->send(frame_op(static_cast<std::uint8_t>(Op::consensus), w.data()));
    }
  }

  void start_round(std::uint64_t view)
  {
    const std::uint64_t h = node.store().height() + 1;
    last_started          = {h, view};
    round_open            = true;
    const auto outs       = node.begin_round(view, now_us());
    const bool leading    = node.round_leader() == id;
    spdlog::debug("node {} round h={} v={} leader={}", id, h, view, node.round_leader());
    round_timer.expires_after(std::chrono::milliseconds(config.round_timeout_ms) * (leading ? 3 : 2) / 2);
    round_timer.async_wait([this](const error_code& ec) {
      if (ec || !round_open)
      {
        return;
      }
      send(node.round_timeout());
      finish_if_decided();
    });
    send(outs);
    finish_if_decided();
  }

  void finish_if_decided()
  {
    if (!round_open || node.outcome() == ledger::RoundOutcome::pending)
    {
      return;
    }
    round_open = false;
    round_timer.cancel();
    last_progress = std::chrono::steady_clock::now();
    if (node.outcome() == ledger::RoundOutcome::committed)
    {
      view_hint = 0;
      height    = node.store().height();
      spdlog::info("node {} committed block {} ({} txs)", id, node.store().height(),
                   node.store().tip().block.txs.size());
    }
    else
    {
      view_hint = node.round_view() + 1;
      spdlog::info("node {} round {} view {} ended: {}", id, node.round_height(), node.round_view(),
                   ledger::to_string(node.outcome()));
    }
  }

  void on_consensus(ledger::NodeId from, const ledger::ConsensusMessage& msg)
  {
    const std::uint64_t next = node.store().height() + 1;
    std::uint64_t h = 0;
    std::uint64_t v = 0;
    if (const auto* p = std::get_if<ledger::Propose>(&msg))
    {
      h = p->block.header.height;
      v = p->view;
    }
    else if (const auto* s = std::get_if<ledger::SignedRelay>(&msg))
    {
      h = s->height;
      v = s->view;
    }
    else
    {
      h = std::get<ledger::Confirm>(msg).height;
      if (!round_open || node.round_height() != h)
      {
        return;
      }
      v = node.round_view();
    }
    if (h != next)
    {
      if (h > next)
      {
        spdlog::warn("node {} is behind: peer {} is at height {}, local next is {}", id, from, h, next);
      }
      return;
    }
    const bool current = round_open && node.round_height() == h && node.round_view() == v;
    if (!current)
    {
      if (std::pair(h, v) <= last_started)
      {
        return;
      }
      start_round(v);
    }
    send(node.receive(from, msg));
    finish_if_decided();
  }

  void on_tick()
  {
    const auto now = std::chrono::steady_clock::now();
    if (!round_open)
    {
      if (node.pending() == 0)
      {
        last_progress = now;
      }
      else
      {
        const std::uint64_t next = node.store().height() + 1;
        if (config.leader_for(next, view_hint) == id && std::pair(next, view_hint) > last_started)
        {
          start_round(view_hint);
        }
        else if (now - last_progress > std::chrono::milliseconds(config.round_timeout_ms) * 2)
        {
          ++view_hint;
          last_progress = now;
        }
      }
    }
    tick.expires_after(std::chrono::milliseconds(config.block_interval_ms));
    tick.async_wait([this](const error_code& ec) {
      if (!ec)
      {
        on_tick();
      }
    });
  }

  ledger::ClusterConfig config;
  ledger::NodeId id;
  asio::io_context io;
  ledger::ConsensusNode node;
  tcp::acceptor acceptor;
  asio::steady_timer tick;
  asio::steady_timer round_timer;
  std::map<ledger::NodeId, std::shared_ptr<PeerLink>> peers;
  bool round_open = false;
  std::pair<std::uint64_t, std::uint64_t> last_started{0, 0};
  std::uint64_t view_hint = 0;
  std::chrono::steady_clock::time_point last_progress = std::chrono::steady_clock::now();
  std::atomic<std::uint64_t> height{0};
};

LedgerServer::LedgerServer(ledger::ClusterConfig config, ledger::NodeId id, SigningKey key,
                           std::optional<std::filesystem::path> chain_file)
  : impl_(std::make_unique<Impl>(std::move(config), id, std::move(key), std::move(chain_file)))
{}

LedgerServer::~LedgerServer() = default;

void LedgerServer::run()
{
  spdlog::info("ledger node {} listening on port {} (height {})", impl_->id, port(), impl_->node.store().height());
  impl_->accept();
  impl_->on_tick();
  impl_->io.run();
}

void LedgerServer::stop() { impl_->io.stop(); }

std::uint16_t LedgerServer::port() const { return impl_->acceptor.local_endpoint().port(); }

std::uint64_t LedgerServer::height() const { return impl_->height.load(); }

} // namespace veriframe::net
