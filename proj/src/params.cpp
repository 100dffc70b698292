#include "holdpp/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace holdpp {

namespace {
void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument("HoldParams: " + msg);
}
}  // namespace

void HoldParams::validate() const {
  require(order >= 1, "order must be >= 1");
  require(dim >= 1, "dim must be >= 1");
  require(static_cast<int>(gammas.size()) == order - 1,
          "gammas must have length order-1, got " +
              std::to_string(gammas.size()));
  for (double g : gammas)
    require(std::isfinite(g) && g > 0, "all gammas must be positive");
  require(std::isfinite(xi) && xi > 0, "xi must be positive");
  require(std::isfinite(inv_mass) && inv_mass > 0, "inv_mass must be positive");
  require(std::isfinite(beta) && beta > 0, "beta must be positive");
  require(std::isfinite(eps_num) && eps_num > 0, "eps_num must be positive");
  require(std::isfinite(horizon) && horizon > 0, "horizon must be positive");
}

}  // namespace holdpp
