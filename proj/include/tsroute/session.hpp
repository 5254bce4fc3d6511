#pragma once

#include <string>
#include <vector>

namespace tsroute {

using SessionFeatures = std::vector<double>;

// One replayed customer interaction.
struct Session {
  std::string id;
  SessionFeatures features;
  double historical_price = 0.0;  // p_i > 0
  int y = 0;                      // historical ground truth, 1 = purchased

  friend bool operator==(const Session&, const Session&) = default;
};

using SessionLog = std::vector<Session>;

}  // namespace tsroute
