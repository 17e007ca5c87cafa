#pragma once

#include <string>

#include "bfmadapt/types.hpp"

namespace bfma {

struct RewardTask {
  std::string name;
  Vec reward;  // state reward, length n_states
  int horizon = 60;
  int eval_episodes = 50;
};

}  // namespace bfma
