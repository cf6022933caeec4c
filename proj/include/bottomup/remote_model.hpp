#pragma once

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <regex>
#include <set>

#include "bottomup/scripted_oracle.hpp"

namespace bottomup {

struct RemoteConfig {
  std::string url;  // e.g. http://127.0.0.1:8080/v1/role
  int timeout_ms = 30000;
  int retries = 2;
  int max_tokens = 512;
  PriceTable prices;
};

/// Reply from the model endpoint.
struct RemoteReply {
  std::string content;
  std::uint64_t tokens_in = 0;
  std::uint64_t tokens_out = 0;
};

/// Client for a prompt-conditioned model behind HTTP. Every reply is
/// validated against the same contract as the scripted oracle; an invalid
/// reply counts as a failed call and the scripted rule answers that step.
class RemoteModel : public Reasoner {
 public:
  explicit RemoteModel(RemoteConfig config) : config_(std::move(config)), meter_(config_.prices) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.url, m, kUrl)) {
      throw InvalidArgument("remote model: bad url '" + config_.url + "'");
    }
    origin_ = m[1];
    path_ = m[2].matched ? std::string(m[2]) : "/";
  }

  /// Request body sent for one role call.
  static nlohmann::json request_body(Role role, const std::string& observation_digest,
                                     const std::string& skill_summaries, const std::string& trajectory_digest,
                                     int max_tokens) {
    return {{"role", to_string(role)},
            {"template_id", role_template(role).template_id},
            {"slots",
             {{"observation_digest", observation_digest},
              {"skill_summaries", skill_summaries},
              {"trajectory_digest", trajectory_digest}}},
            {"max_tokens", max_tokens}};
  }

  /// Validates a select reply: a JSON array of known ids. Throws ProtocolError.
  static std::vector<SkillId> parse_select(const std::string& content, const std::vector<SkillSummary>& library) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception&) {
      throw ProtocolError("select: content is not JSON");
    }
    if (!j.is_array()) throw ProtocolError("select: content is not a JSON array");
    std::set<SkillId> known;
    for (const auto& s : library) known.insert(s.id);
    std::vector<SkillId> ids;
    for (const auto& v : j) {
      if (!v.is_string()) throw ProtocolError("select: id is not a string");
      auto id = v.get<std::string>();
      if (!known.count(id)) throw ProtocolError("select: unknown id '" + id + "'");
      if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    }
    if (ids.size() > kSelectCap) ids.resize(kSelectCap);
    return ids;
  }

  std::vector<SkillId> select(const ObservationDigest& digest, const std::vector<SkillSummary>& library) override {
    return call<std::vector<SkillId>>(
        Role::Select, digest.to_text(), summaries_text(library), "",
        [&](const std::string& content) { return parse_select(content, library); },
        [&] { return ScriptedOracle::select_rule(digest, library); });
  }

  std::string describe(const Observation& before, const Skill& skill, const Trajectory& trajectory,
                       const Legend& legend) override {
    if (trajectory.after_states.empty()) throw InvalidArgument("describe: empty trajectory");
    return call<std::string>(
        Role::Describe, make_digest(before, legend).to_text(), skill_text(skill), trajectory_text(trajectory),
        [](const std::string& content) {
          if (content.find_first_not_of(" \t\r\n") == std::string::npos) {
            throw ProtocolError("describe: empty description");
          }
          return content;
        },
        [&] { return ScriptedOracle::describe_rule(before, skill, trajectory, legend); });
  }

  double differ(const Skill& skill, const Observation& before, const Observation& after,
                ProgressDelta progress) override {
    if (before.size() != after.size()) throw InvalidArgument("differ: dimension mismatch");
    Trajectory t;
    t.per_step_diffs = {observation_diff(before, after)};
    t.progress_after.progression = progress.progression;
    t.progress_after.score = progress.score;
    return call<double>(
        Role::Differ, before.to_text() + "---\n" + after.to_text(), skill_text(skill), trajectory_text(t),
        [](const std::string& content) {
          std::size_t used = 0;
          double v = 0.0;
          try {
            v = std::stod(content, &used);
          } catch (const std::exception&) {
            throw ProtocolError("differ: not a number");
          }
          if (content.find_first_not_of(" \t\r\n", used) != std::string::npos) {
            throw ProtocolError("differ: trailing text");
          }
          if (!(v >= 0.0 && v <= 1.0)) throw ProtocolError("differ: score out of [0,1]");
          return v;
        },
        [&] { return semantic_rubric(observation_diff(before, after), progress); });
  }

  std::optional<Skill> refine(const Observation& before, const Skill& skill, const Trajectory& trajectory,
                              const IdSource& fresh_id) override {
    return call<std::optional<Skill>>(
        Role::Refine, before.to_text(), skill_text(skill), trajectory_text(trajectory),
        [&](const std::string& content) -> std::optional<Skill> {
          auto first = content.find_first_not_of(" \t\r\n");
          if (first == std::string::npos) return std::nullopt;
          auto last = content.find_last_not_of(" \t\r\n");
          std::vector<AtomicAction> actions;
          try {
            actions = parse_actions(std::string_view(content).substr(first, last - first + 1));
          } catch (const ParseError& e) {
            throw ProtocolError(std::string("refine: ") + e.what());
          }
          if (actions.empty()) throw ProtocolError("refine: empty skill");
          // Lengthening rewrites are not accepted yet.
          if (actions.size() > skill.actions.size()) throw ProtocolError("refine: variant is longer than original");
          for (const auto& a : actions) {
            try {
              check_in_bounds(a, before.size());
            } catch (const InvalidArgument& e) {
              throw ProtocolError(std::string("refine: ") + e.what());
            }
          }
          if (actions == skill.actions) return std::nullopt;
          return make_skill(fresh_id(), std::move(actions), skill.parent_id);
        },
        [&] { return ScriptedOracle::refine_rule(skill, trajectory, fresh_id); });
  }

  std::vector<std::vector<SkillId>> cluster(const std::vector<SkillSummary>& skills) override {
    return call<std::vector<std::vector<SkillId>>>(
        Role::Cluster, "", summaries_text(skills), "",
        [&](const std::string& content) {
          auto j = nlohmann::json::parse(content);
          if (!j.is_array()) throw ProtocolError("cluster: content is not a JSON array");
          std::set<SkillId> known;
          for (const auto& s : skills) known.insert(s.id);
          std::set<SkillId> seen;
          std::vector<std::vector<SkillId>> groups;
          for (const auto& g : j) {
            if (!g.is_array()) throw ProtocolError("cluster: group is not an array");
            std::vector<SkillId> members;
            for (const auto& v : g) {
              if (!v.is_string()) throw ProtocolError("cluster: id is not a string");
              auto id = v.get<std::string>();
              if (!known.count(id)) throw ProtocolError("cluster: unknown id '" + id + "'");
              if (!seen.insert(id).second) throw ProtocolError("cluster: id in two groups '" + id + "'");
              members.push_back(id);
            }
            std::sort(members.begin(), members.end());
            if (members.size() > 1) groups.push_back(std::move(members));
          }
          std::sort(groups.begin(), groups.end());
          return groups;
        },
        [&] { return ScriptedOracle::cluster_rule(skills); });
  }

  ReasonerUsage usage() const override { return meter_.snapshot(); }

  /// Sends one request, retrying transport failures. Throws ProtocolError
  /// when no well-formed reply arrives.
  RemoteReply post(const nlohmann::json& body) const {
    httplib::Client client(origin_);
    auto sec = config_.timeout_ms / 1000;
    auto usec = (config_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    std::string last_error = "no attempt";
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      auto res = client.Post(path_, body.dump(), "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception&) {
        throw ProtocolError("reply body is not JSON");
      }
      if (!j.is_object() || !j.contains("content") || !j["content"].is_string() || !j.contains("tokens_in") ||
          !j["tokens_in"].is_number_unsigned() || !j.contains("tokens_out") || !j["tokens_out"].is_number_unsigned()) {
        throw ProtocolError("reply body lacks content/tokens_in/tokens_out");
      }
      return {j["content"].get<std::string>(), j["tokens_in"].get<std::uint64_t>(), j["tokens_out"].get<std::uint64_t>()};
    }
    throw ProtocolError("remote model unreachable: " + last_error);
  }

 private:
  static std::string skill_text(const Skill& s) {
    return s.id + " | " + to_string(std::span<const AtomicAction>(s.actions)) + " | " + s.descriptor + "\n";
  }

  template <class T, class Parse, class Fallback>
  T call(Role role, const std::string& observation_digest, const std::string& skill_summaries,
         const std::string& trajectory_digest, Parse&& parse, Fallback&& fallback) {
    RemoteReply reply;
    try {
      reply = post(request_body(role, observation_digest, skill_summaries, trajectory_digest, config_.max_tokens));
    } catch (const ProtocolError&) {
      meter_.record(role, 0, 0, /*failed=*/true);
      return fallback();
    }
    try {
      T value = parse(reply.content);
      meter_.record(role, reply.tokens_in, reply.tokens_out);
      return value;
    } catch (const ProtocolError&) {
    } catch (const nlohmann::json::exception&) {
    }
    meter_.record(role, reply.tokens_in, reply.tokens_out, /*failed=*/true);
    return fallback();
  }

  RemoteConfig config_;
  std::string origin_;
  std::string path_;
  mutable UsageMeter meter_;
};

}  // namespace bottomup
