#include "veriframe/ledger/config.hpp"

#include "veriframe/hash.hpp"

#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace veriframe::ledger {

namespace {

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(std::string_view hex, std::string_view what)
{
  const Bytes raw = from_hex(hex);
  if (raw.size() != N)
  {
    throw InvalidArgument(std::string(what) + " must be " + std::to_string(2 * N) + " hex digits");
  }
  std::array<std::uint8_t, N> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

template <typename T>
T require(const toml::node_view<const toml::node>& node, std::string_view what)
{
  auto v = node.value<T>();
  if (!v)
  {
    throw InvalidArgument("cluster config: missing or invalid '" + std::string(what) + "'");
  }
  return *v;
}

} // namespace

const Member* ClusterConfig::member(NodeId id) const noexcept
{
  for (const Member& m : members)
  {
    if (m.id == id)
    {
      return &m;
    }
  }
  return nullptr;
}

NodeId ClusterConfig::leader_for(std::uint64_t height, std::uint64_t view) const
{
  if (members.empty())
  {
    throw InvalidArgument("cluster has no members");
  }
  std::uint64_t slot = 0;
  if (leader_rule == LeaderRule::round_robin)
  {
    slot = height + view;
  }
  else
  {
    ByteWriter w;
    w.u64(leader_seed);
    w.u64(height);
    w.u64(view);
    const Hash32 h = hash::sha256(w.data());
    ByteReader r(h);
    slot = r.u64();
  }
  return members[slot % members.size()].id;
}

void ClusterConfig::validate() const
{
  if (members.size() < kMinMembers)
  {
    throw InvalidArgument("a permissioned cluster needs at least three members, got " +
                          std::to_string(members.size()));
  }
  std::set<NodeId> ids;
  for (const Member& m : members)
  {
    if (!ids.insert(m.id).second)
    {
      throw InvalidArgument("duplicate member id " + std::to_string(m.id));
    }
  }
  if (max_block_txs == 0)
  {
    throw InvalidArgument("max_block_txs must be >= 1");
  }
}

std::string ClusterConfig::to_toml() const
{
  toml::table cluster{
      {"quorum", static_cast<std::int64_t>(quorum())},
      {"leader_rule", leader_rule == LeaderRule::round_robin ? "round_robin" : "seeded_random"},
      {"leader_seed", static_cast<std::int64_t>(leader_seed)},
      {"genesis_timestamp_us", static_cast<std::int64_t>(genesis_timestamp_us)},
      {"max_block_txs", static_cast<std::int64_t>(max_block_txs)},
      {"block_interval_ms", static_cast<std::int64_t>(block_interval_ms)},
      {"round_timeout_ms", static_cast<std::int64_t>(round_timeout_ms)},
  };
  toml::array member_array;
  for (const Member& m : members)
  {
    member_array.push_back(toml::table{
        {"id", static_cast<std::int64_t>(m.id)},
        {"name", m.name},
        {"address", m.address},
        {"public_key", to_hex(m.public_key)},
    });
  }
  toml::table root{{"cluster", std::move(cluster)}, {"member", std::move(member_array)}};
  std::ostringstream out;
  out << root << '\n';
  return out.str();
}

ClusterConfig ClusterConfig::from_toml(std::string_view text)
{
  toml::table root;
  try
  {
    root = toml::parse(text);
  }
  catch (const toml::parse_error& e)
  {
    throw InvalidArgument(std::string("cluster config: ") + std::string(e.description()));
  }

  const toml::table& croot = root;
  ClusterConfig c;
  const auto cluster = croot["cluster"];
  const std::string rule = cluster["leader_rule"].value_or<std::string>("round_robin");
  if (rule == "round_robin")
  {
    c.leader_rule = LeaderRule::round_robin;
  }
  else if (rule == "seeded_random")
  {
    c.leader_rule = LeaderRule::seeded_random;
  }
  else
  {
    throw InvalidArgument("cluster config: unknown leader_rule '" + rule + "'");
  }
  c.leader_seed          = static_cast<std::uint64_t>(cluster["leader_seed"].value_or<std::int64_t>(0));
  c.genesis_timestamp_us = static_cast<std::uint64_t>(
      cluster["genesis_timestamp_us"].value_or<std::int64_t>(static_cast<std::int64_t>(c.genesis_timestamp_us)));
  c.max_block_txs     = static_cast<std::uint32_t>(cluster["max_block_txs"].value_or<std::int64_t>(c.max_block_txs));
  c.block_interval_ms = static_cast<std::uint32_t>(cluster["block_interval_ms"].value_or<std::int64_t>(c.block_interval_ms));
  c.round_timeout_ms  = static_cast<std::uint32_t>(cluster["round_timeout_ms"].value_or<std::int64_t>(c.round_timeout_ms));

  const toml::array* arr = croot["member"].as_array();
  if (arr == nullptr)
  {
    throw InvalidArgument("cluster config: no [[member]] entries");
  }
  for (const toml::node& node : *arr)
  {
    const toml::table* t = node.as_table();
    if (t == nullptr)
    {
      throw InvalidArgument("cluster config: member entry is not a table");
    }
    const toml::node_view<const toml::node> view{node};
    Member m;
    const std::int64_t id = require<std::int64_t>(view["id"], "member.id");
    if (id < 0 || id > 0xFFFF)
    {
      throw InvalidArgument("cluster config: member id out of range");
    }
    m.id         = static_cast<NodeId>(id);
    m.name       = require<std::string>(view["name"], "member.name");
    m.address    = view["address"].value_or<std::string>("");
    m.public_key = fixed_from_hex<32>(require<std::string>(view["public_key"], "member.public_key"), "public_key");
    c.members.push_back(std::move(m));
  }

  c.validate();
  if (auto q = cluster["quorum"].value<std::int64_t>(); q && static_cast<std::size_t>(*q) != c.quorum())
  {
    throw InvalidArgument("cluster config: quorum " + std::to_string(*q) + " does not match ceil((2n-1)/3) = " +
                          std::to_string(c.quorum()));
  }
  return c;
}

ClusterConfig ClusterConfig::load(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("cannot open cluster config " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return from_toml(buf.str());
}

void ClusterConfig::save(const std::filesystem::path& path) const
{
  std::ofstream out(path, std::ios::trunc);
  out << to_toml();
  if (!out)
  {
    throw IoError("failed writing cluster config " + path.string());
  }
}

std::vector<std::string> default_member_names(std::size_t n)
{
  std::vector<std::string> names{"court", "police", "fire"};
  for (std::size_t i = names.size(); i < n; ++i)
  {
    names.push_back("member-" + std::to_string(i));
  }
  names.resize(n);
  return names;
}

Bootstrap bootstrap_cluster(std::size_t n, std::vector<std::string> names, std::uint64_t seed,
                            const std::string& host, std::uint16_t base_port)
{
  if (n < kMinMembers)
  {
    throw InvalidArgument("refusing to bootstrap " + std::to_string(n) +
                          " members: a permissioned ledger needs at least three");
  }
  if (n > 0xFFFF)
  {
    throw InvalidArgument("too many members");
  }
  if (names.empty())
  {
    names = default_member_names(n);
  }
  if (names.size() != n)
  {
    throw InvalidArgument("expected " + std::to_string(n) + " member names, got " + std::to_string(names.size()));
  }

  Bootstrap b;
  for (std::size_t i = 0; i < n; ++i)
  {
    ByteWriter w;
    w.bytes(as_bytes("veriframe-member-key"));
    w.u64(seed);
    w.u64(i);
    SigningKey key(hash::sha256(w.data()));

    Member m;
    m.id         = static_cast<NodeId>(i);
    m.name       = names[i];
    m.address    = host + ":" + std::to_string(base_port + i);
    m.public_key = key.public_key();
    b.config.members.push_back(std::move(m));
    b.keys.push_back(std::move(key));
  }
  b.config.leader_seed = seed;
  b.config.validate();
  return b;
}

void write_bootstrap(const Bootstrap& bootstrap, const std::filesystem::path& dir)
{
  std::filesystem::create_directories(dir);
  bootstrap.config.save(dir / "cluster.toml");
  for (std::size_t i = 0; i < bootstrap.keys.size(); ++i)
  {
    save_key(bootstrap.keys[i], dir / ("node-" + std::to_string(bootstrap.config.members[i].id) + ".key"));
  }
}

SigningKey load_key(const std::filesystem::path& path)
{
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line))
  {
    throw IoError("cannot read key file " + path.string());
  }
  return SigningKey(fixed_from_hex<32>(line, "key seed"));
}

void save_key(const SigningKey& key, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::trunc);
  out << to_hex(key.seed()) << '\n';
  if (!out)
  {
    throw IoError("failed writing key file " + path.string());
  }
  std::filesystem::permissions(path, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write);
}

Block make_genesis(const ClusterConfig& config)
{
  Block g;
  g.header.height       = 0;
  g.header.tx_root      = compute_tx_root({});
  g.header.timestamp_us = config.genesis_timestamp_us;
  g.header.leader_id    = 0;
  return g;
}

} // namespace veriframe::ledger
