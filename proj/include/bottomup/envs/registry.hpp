#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "bottomup/envs/bandit.hpp"
#include "bottomup/envs/buttonworld.hpp"
#include "bottomup/envs/microspire.hpp"

namespace bottomup {

inline std::unique_ptr<Environment> make_environment(std::string_view env_id) {
  if (env_id == "microspire") return std::make_unique<MicroSpire>();
  if (env_id == "buttonworld") return std::make_unique<ButtonWorld>();
  if (env_id == "bandit") return std::make_unique<BanditEnv>();
  throw InvalidArgument("unknown env id '" + std::string(env_id) + "'");
}

/// Fresh environment of the snapshot's kind, restored to the snapshot.
inline std::unique_ptr<Environment> environment_from(const EnvSnapshot& snap) {
  auto env = make_environment(snap.env_id);
  env->restore(snap);
  return env;
}

}  // namespace bottomup
