#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bottomup/error.hpp"
#include "bottomup/skill.hpp"

namespace bottomup {

inline constexpr int kLibrarySchemaVersion = 1;

enum class TombstoneReason { Pruned, Merged };

inline const char* to_string(TombstoneReason r) { return r == TombstoneReason::Pruned ? "pruned" : "merged"; }

struct Tombstone {
  TombstoneReason reason = TombstoneReason::Pruned;
  std::optional<SkillId> merged_into;
  std::uint64_t at_version = 0;

  bool operator==(const Tombstone&) const = default;
  auto key() const { return std::tuple(at_version, static_cast<int>(reason), merged_into.value_or("")); }
};

/// One grow-only contribution to a record's execution counters. Each
/// (agent, epoch) key only ever grows, so merges take the field-wise max.
struct CounterEntry {
  std::uint64_t executions = 0;
  std::uint64_t responsive_executions = 0;
  double semantics_sum = 0.0;
  std::uint64_t semantics_count = 0;

  bool operator==(const CounterEntry&) const = default;

  static CounterEntry join(const CounterEntry& a, const CounterEntry& b) {
    return {std::max(a.executions, b.executions), std::max(a.responsive_executions, b.responsive_executions),
            std::max(a.semantics_sum, b.semantics_sum), std::max(a.semantics_count, b.semantics_count)};
  }
};

struct SkillRecord {
  Skill skill;  // skill.stats counters are derived from `counters`
  std::map<std::string, CounterEntry> counters;
  std::uint64_t version = 0;
  std::optional<Tombstone> tombstone;
  std::uint64_t origin_observation_hash = 0;

  bool live() const noexcept { return !tombstone.has_value(); }

  void refresh_stats() {
    ExecStats s;
    s.last_total_reward = skill.stats.last_total_reward;
    for (const auto& [key, c] : counters) {
      s.executions += c.executions;
      s.responsive_executions += c.responsive_executions;
      s.semantics_sum += c.semantics_sum;
      s.semantics_count += c.semantics_count;
    }
    skill.stats = s;
  }

  bool operator==(const SkillRecord&) const = default;
};

struct LibrarySnapshot {
  int schema_version = kLibrarySchemaVersion;
  std::string env_id;
  std::string created_at = "1970-01-01T00:00:00Z";
  std::uint64_t global_version = 0;
  std::map<SkillId, SkillRecord> records;

  std::size_t live_count() const {
    std::size_t n = 0;
    for (const auto& [id, r] : records) n += r.live() ? 1 : 0;
    return n;
  }

  bool operator==(const LibrarySnapshot&) const = default;
};

namespace detail {

inline nlohmann::json content_json(const SkillRecord& r) {
  nlohmann::json j;
  j["actions"] = to_string(std::span<const AtomicAction>(r.skill.actions));
  j["descriptor"] = r.skill.descriptor;
  j["embedding"] = r.skill.embedding;
  j["parent_id"] = r.skill.parent_id ? nlohmann::json(*r.skill.parent_id) : nlohmann::json(nullptr);
  j["fingerprint"] = r.skill.fingerprint;
  j["origin_observation_hash"] = to_hex(r.origin_observation_hash);
  j["last_total_reward"] = r.skill.stats.last_total_reward;
  return j;
}

inline std::string content_hash(const SkillRecord& r) { return to_hex(fnv1a64(content_json(r).dump())); }

}  // namespace detail

/// Join of two records with the same id: content from the higher version
/// (ties to the smaller content hash), counters joined per key, tombstone
/// wins.
inline SkillRecord merge_records(const SkillRecord& a, const SkillRecord& b) {
  const SkillRecord* winner = &a;
  if (b.version > a.version || (b.version == a.version && detail::content_hash(b) < detail::content_hash(a))) {
    winner = &b;
  }
  SkillRecord out = *winner;
  out.version = std::max(a.version, b.version);
  out.counters = a.counters;
  for (const auto& [key, c] : b.counters) {
    auto it = out.counters.find(key);
    if (it == out.counters.end()) {
      out.counters.emplace(key, c);
    } else {
      it->second = CounterEntry::join(it->second, c);
    }
  }
  if (a.tombstone && b.tombstone) {
    out.tombstone = a.tombstone->key() <= b.tombstone->key() ? a.tombstone : b.tombstone;
  } else {
    out.tombstone = a.tombstone ? a.tombstone : b.tombstone;
  }
  out.refresh_stats();
  return out;
}

/// Record-wise join of two replicas. Commutative, associative, idempotent.
inline LibrarySnapshot merge(const LibrarySnapshot& local, const LibrarySnapshot& remote) {
  if (local.schema_version != remote.schema_version) {
    throw InvalidArgument("merge: schema version mismatch (" + std::to_string(local.schema_version) + " vs " +
                          std::to_string(remote.schema_version) + ")");
  }
  LibrarySnapshot out;
  out.schema_version = local.schema_version;
  out.env_id = std::min(local.env_id, remote.env_id);
  if (local.env_id.empty() || remote.env_id.empty()) out.env_id = std::max(local.env_id, remote.env_id);
  out.created_at = std::min(local.created_at, remote.created_at);
  out.global_version = std::max(local.global_version, remote.global_version);
  out.records = local.records;
  for (const auto& [id, rec] : remote.records) {
    auto it = out.records.find(id);
    if (it == out.records.end()) {
      out.records.emplace(id, rec);
    } else {
      it->second = merge_records(it->second, rec);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: JSON Lines, header first, records sorted by id.

inline nlohmann::json to_json(const SkillRecord& r) {
  nlohmann::json j = detail::content_json(r);
  j["id"] = r.skill.id;
  j["version"] = r.version;
  if (r.tombstone) {
    j["tombstone"] = {{"reason", to_string(r.tombstone->reason)},
                      {"merged_into", r.tombstone->merged_into ? nlohmann::json(*r.tombstone->merged_into)
                                                               : nlohmann::json(nullptr)},
                      {"at_version", r.tombstone->at_version}};
  } else {
    j["tombstone"] = nullptr;
  }
  nlohmann::json counters = nlohmann::json::object();
  for (const auto& [key, c] : r.counters) {
    counters[key] = {{"executions", c.executions},
                     {"responsive_executions", c.responsive_executions},
                     {"semantics_sum", c.semantics_sum},
                     {"semantics_count", c.semantics_count}};
  }
  j["counters"] = counters;
  return j;
}

inline SkillRecord record_from_json(const nlohmann::json& j) {
  SkillRecord r;
  r.skill.id = j.at("id").get<std::string>();
  r.skill.actions = parse_actions(j.at("actions").get<std::string>());
  if (r.skill.actions.empty()) throw ParseError("record has no actions");
  r.skill.descriptor = j.at("descriptor").get<std::string>();
  const auto& emb = j.at("embedding");
  if (!emb.is_array() || emb.size() != kEmbeddingDim) throw ParseError("embedding must have 64 components");
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) r.skill.embedding[i] = emb[i].get<double>();
  if (!j.at("parent_id").is_null()) r.skill.parent_id = j.at("parent_id").get<std::string>();
  r.skill.fingerprint = j.at("fingerprint").get<std::string>();
  if (r.skill.fingerprint != fingerprint(r.skill.actions)) throw ParseError("fingerprint does not match actions");
  r.origin_observation_hash = std::stoull(j.at("origin_observation_hash").get<std::string>(), nullptr, 16);
  r.skill.stats.last_total_reward = j.at("last_total_reward").get<double>();
  r.version = j.at("version").get<std::uint64_t>();
  if (!j.at("tombstone").is_null()) {
    const auto& t = j.at("tombstone");
    Tombstone ts;
    auto reason = t.at("reason").get<std::string>();
    if (reason == "pruned") {
      ts.reason = TombstoneReason::Pruned;
    } else if (reason == "merged") {
      ts.reason = TombstoneReason::Merged;
    } else {
      throw ParseError("unknown tombstone reason '" + reason + "'");
    }
    if (!t.at("merged_into").is_null()) ts.merged_into = t.at("merged_into").get<std::string>();
    ts.at_version = t.at("at_version").get<std::uint64_t>();
    r.tombstone = ts;
  }
  for (const auto& [key, c] : j.at("counters").items()) {
    r.counters[key] = CounterEntry{c.at("executions").get<std::uint64_t>(),
                                   c.at("responsive_executions").get<std::uint64_t>(),
                                   c.at("semantics_sum").get<double>(), c.at("semantics_count").get<std::uint64_t>()};
  }
  r.refresh_stats();
  return r;
}

inline std::string serialize(const LibrarySnapshot& snap) {
  nlohmann::json header = {{"schema_version", snap.schema_version},
                           {"env_id", snap.env_id},
                           {"created_at", snap.created_at},
                           {"global_version", snap.global_version},
                           {"record_count", snap.records.size()}};
  std::string out = header.dump() + "\n";
  for (const auto& [id, rec] : snap.records) out += to_json(rec).dump() + "\n";
  return out;
}

inline LibrarySnapshot deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("library: empty file (missing header)");
  LibrarySnapshot snap;
  std::size_t expected = 0;
  try {
    auto h = nlohmann::json::parse(line);
    snap.schema_version = h.at("schema_version").get<int>();
    snap.env_id = h.at("env_id").get<std::string>();
    snap.created_at = h.at("created_at").get<std::string>();
    snap.global_version = h.at("global_version").get<std::uint64_t>();
    expected = h.at("record_count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("library: bad header (line 1): ") + e.what());
  }
  if (snap.schema_version != kLibrarySchemaVersion) {
    throw ParseError("library: unsupported schema version " + std::to_string(snap.schema_version));
  }
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      auto rec = record_from_json(nlohmann::json::parse(line));
      if (snap.records.count(rec.skill.id)) throw ParseError("duplicate id '" + rec.skill.id + "'");
      snap.records.emplace(rec.skill.id, std::move(rec));
    } catch (const std::exception& e) {
      throw ParseError("library: record " + std::to_string(index) + " (line " + std::to_string(index + 2) +
                       "): " + e.what());
    }
    ++index;
  }
  if (index != expected) {
    throw ParseError("library: truncated, expected " + std::to_string(expected) + " records, record " +
                     std::to_string(index) + " missing");
  }
  return snap;
}

inline void save(const LibrarySnapshot& snap, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("library: cannot write " + path.string());
  out << serialize(snap);
  if (!out) throw Error("library: write failed for " + path.string());
}

inline LibrarySnapshot load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("library: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

// ---------------------------------------------------------------------------

/// The shared skill library. Every operation is atomic; many agent loops
/// may use one store concurrently.
class LibraryStore {
 public:
  explicit LibraryStore(std::string env_id = {}, std::string replica_id = "a0")
      : replica_id_(std::move(replica_id)) {
    snap_.env_id = std::move(env_id);
  }

  explicit LibraryStore(LibrarySnapshot snap, std::string replica_id = "a0")
      : replica_id_(std::move(replica_id)), snap_(std::move(snap)) {
    for (const auto& [id, r] : snap_.records) {
      if (r.live()) live_by_fingerprint_[r.skill.fingerprint] = id;
    }
    // Continue numbering after any id this replica already issued.
    const std::string prefix = replica_id_ + "-";
    for (const auto& [id, r] : snap_.records) {
      if (id.rfind(prefix, 0) == 0) {
        try {
          next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(prefix.size())) + 1);
        } catch (const std::exception&) {
        }
      }
    }
  }

  const std::string& replica_id() const noexcept { return replica_id_; }

  SkillId next_id() {
    std::lock_guard lock(mu_);
    return issue_id();
  }

  /// Inserts a skill, or returns the id of the live record with the same
  /// fingerprint.
  SkillId insert(Skill skill, std::uint64_t origin_hash) {
    std::lock_guard lock(mu_);
    if (skill.actions.empty()) throw InvalidArgument("insert: empty skill");
    skill.fingerprint = fingerprint(skill.actions);
    if (auto it = live_by_fingerprint_.find(skill.fingerprint); it != live_by_fingerprint_.end()) return it->second;
    if (skill.id.empty() || snap_.records.count(skill.id)) skill.id = issue_id();
    SkillRecord rec;
    rec.skill = std::move(skill);
    rec.skill.stats = ExecStats{};
    rec.origin_observation_hash = origin_hash;
    rec.version = bump();
    const SkillId id = rec.skill.id;
    live_by_fingerprint_[rec.skill.fingerprint] = id;
    snap_.records.emplace(id, std::move(rec));
    return id;
  }

  /// Adds one execution to the counters of `agent` (defaults to this replica).
  void record_execution(const SkillId& id, bool responsive, double semantics, std::optional<double> total_reward = {},
                        const std::string& agent = {}) {
    std::lock_guard lock(mu_);
    SkillRecord& r = live_record(id, "record_execution");
    CounterEntry& c = r.counters[counter_key(agent)];
    c.executions += 1;
    c.responsive_executions += responsive ? 1 : 0;
    c.semantics_sum += semantics;
    c.semantics_count += 1;
    if (total_reward) r.skill.stats.last_total_reward = *total_reward;
    r.version = bump();
    r.refresh_stats();
  }

  /// Follows merged-into links from `id` to the live record that replaced it.
  std::optional<SkillId> resolve(const SkillId& id) const {
    std::lock_guard lock(mu_);
    SkillId cur = id;
    for (std::size_t hops = 0; hops <= snap_.records.size(); ++hops) {
      auto it = snap_.records.find(cur);
      if (it == snap_.records.end()) return std::nullopt;
      if (it->second.live()) return cur;
      if (!it->second.tombstone->merged_into) return std::nullopt;
      cur = *it->second.tombstone->merged_into;
    }
    return std::nullopt;
  }

  /// Tombstones a record. Idempotent: a second prune changes nothing.
  void prune(const SkillId& id, TombstoneReason reason = TombstoneReason::Pruned,
             std::optional<SkillId> merged_into = std::nullopt) {
    std::lock_guard lock(mu_);
    auto it = snap_.records.find(id);
    if (it == snap_.records.end()) throw UnknownSkill("prune: unknown id '" + id + "'");
    SkillRecord& r = it->second;
    if (!r.live()) return;
    r.version = bump();
    r.tombstone = Tombstone{reason, std::move(merged_into), r.version};
    if (auto f = live_by_fingerprint_.find(r.skill.fingerprint); f != live_by_fingerprint_.end() && f->second == id) {
      live_by_fingerprint_.erase(f);
    }
  }

  /// Folds `member`'s counters into `kept` (under member-scoped keys, so
  /// replicas repeating the same fold do not double count).
  void absorb(const SkillId& kept, const SkillId& member) {
    std::lock_guard lock(mu_);
    SkillRecord& k = live_record(kept, "absorb");
    auto it = snap_.records.find(member);
    if (it == snap_.records.end()) throw UnknownSkill("absorb: unknown id '" + member + "'");
    for (const auto& [key, c] : it->second.counters) {
      auto& dst = k.counters["absorbed:" + member + ":" + key];
      dst = CounterEntry::join(dst, c);
    }
    k.version = bump();
    k.refresh_stats();
  }

  void set_description(const SkillId& id, std::string descriptor, const Embedding& embedding) {
    std::lock_guard lock(mu_);
    SkillRecord& r = live_record(id, "set_description");
    r.skill.descriptor = std::move(descriptor);
    r.skill.embedding = embedding;
    r.version = bump();
  }

  /// True when a routine with this fingerprint was pruned and none is live.
  bool was_pruned(const std::string& fp) const {
    std::lock_guard lock(mu_);
    if (live_by_fingerprint_.count(fp)) return false;
    for (const auto& [id, r] : snap_.records) {
      if (r.tombstone && r.tombstone->reason == TombstoneReason::Pruned && r.skill.fingerprint == fp) return true;
    }
    return false;
  }

  bool has_live_fingerprint(const std::string& fp) const {
    std::lock_guard lock(mu_);
    return live_by_fingerprint_.count(fp) > 0;
  }

  std::optional<SkillRecord> get(const SkillId& id) const {
    std::lock_guard lock(mu_);
    auto it = snap_.records.find(id);
    if (it == snap_.records.end()) return std::nullopt;
    return it->second;
  }

  bool is_live(const SkillId& id) const {
    std::lock_guard lock(mu_);
    auto it = snap_.records.find(id);
    return it != snap_.records.end() && it->second.live();
  }

  std::vector<SkillRecord> live_records() const {
    std::lock_guard lock(mu_);
    std::vector<SkillRecord> out;
    for (const auto& [id, r] : snap_.records) {
      if (r.live()) out.push_back(r);
    }
    return out;
  }

  std::size_t live_count() const {
    std::lock_guard lock(mu_);
    return live_by_fingerprint_.size();
  }

  LibrarySnapshot snapshot() const {
    std::lock_guard lock(mu_);
    return snap_;
  }

  /// Joins a remote replica into this store.
  void merge_from(const LibrarySnapshot& remote) {
    std::lock_guard lock(mu_);
    snap_ = merge(snap_, remote);
    live_by_fingerprint_.clear();
    for (const auto& [id, r] : snap_.records) {
      if (!r.live()) continue;
      auto [it, inserted] = live_by_fingerprint_.emplace(r.skill.fingerprint, id);
      // Two replicas may have inserted the same routine under different ids;
      // keep the smaller id live and fold the other into it.
      if (!inserted) {
        SkillId keep = std::min(it->second, id);
        SkillId drop = std::max(it->second, id);
        it->second = keep;
        auto& d = snap_.records.at(drop);
        auto& k = snap_.records.at(keep);
        for (const auto& [key, c] : d.counters) {
          auto& dst = k.counters["absorbed:" + drop + ":" + key];
          dst = CounterEntry::join(dst, c);
        }
        k.version = bump();
        k.refresh_stats();
        d.version = bump();
        d.tombstone = Tombstone{TombstoneReason::Merged, keep, d.version};
      }
    }
  }

 private:
  std::string counter_key(const std::string& agent) const { return (agent.empty() ? replica_id_ : agent) + "#0"; }

  SkillId issue_id() {
    std::ostringstream ss;
    ss << replica_id_ << '-' << std::setw(6) << std::setfill('0') << next_id_++;
    return ss.str();
  }

  std::uint64_t bump() { return ++snap_.global_version; }

  SkillRecord& live_record(const SkillId& id, const char* op) {
    auto it = snap_.records.find(id);
    if (it == snap_.records.end()) throw UnknownSkill(std::string(op) + ": unknown id '" + id + "'");
    if (!it->second.live()) throw UnknownSkill(std::string(op) + ": id '" + id + "' is tombstoned");
    return it->second;
  }

  std::string replica_id_;
  mutable std::mutex mu_;
  LibrarySnapshot snap_;
  std::map<std::string, SkillId> live_by_fingerprint_;
  std::uint64_t next_id_ = 1;
};

}  // namespace bottomup
