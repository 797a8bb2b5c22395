#pragma once

#include "veriframe/ledger/block.hpp"
#include "veriframe/signing.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace veriframe::ledger {

/// Minimum matching signed copies to commit: ceil((2n - 1) / 3).
constexpr std::size_t quorum_for(std::size_t n) { return (2 * n + 1) / 3; }

inline constexpr std::size_t kMinMembers = 3;

struct Member
{
  NodeId id = 0;
  std::string name;
  std::string address; // host:port
  PublicKey public_key{};

  bool operator==(const Member&) const = default;
};

enum class LeaderRule
{
  round_robin,
  seeded_random,
};

struct ClusterConfig
{
  std::vector<Member> members;
  LeaderRule leader_rule             = LeaderRule::round_robin;
  std::uint64_t leader_seed          = 0;
  std::uint64_t genesis_timestamp_us = 1'700'000'000'000'000ULL;
  std::uint32_t max_block_txs        = 256;
  std::uint32_t block_interval_ms    = 200;
  std::uint32_t round_timeout_ms     = 2000;

  std::size_t n() const noexcept { return members.size(); }
  std::size_t quorum() const noexcept { return quorum_for(members.size()); }
  const Member* member(NodeId id) const noexcept;
  NodeId leader_for(std::uint64_t height, std::uint64_t view) const;

  /// Throws InvalidArgument: fewer than three members, duplicate ids.
  void validate() const;

  std::string to_toml() const;
  static ClusterConfig from_toml(std::string_view text);
  static ClusterConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool operator==(const ClusterConfig&) const = default;
};

struct Bootstrap
{
  ClusterConfig config;
  std::vector<SigningKey> keys; // keys[i] belongs to config.members[i]
};

std::vector<std::string> default_member_names(std::size_t n);

/// Deterministic in `seed`. Refuses n < 3.
Bootstrap bootstrap_cluster(std::size_t n, std::vector<std::string> names = {}, std::uint64_t seed = 0,
                            const std::string& host = "127.0.0.1", std::uint16_t base_port = 7100);

/// Writes cluster.toml and node-<id>.key files into `dir`.
void write_bootstrap(const Bootstrap& bootstrap, const std::filesystem::path& dir);

SigningKey load_key(const std::filesystem::path& path);
void save_key(const SigningKey& key, const std::filesystem::path& path);

Block make_genesis(const ClusterConfig& config);

} // namespace veriframe::ledger
