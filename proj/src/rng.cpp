#include "ramat/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ramat/error.hpp"

namespace ramat {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kData:
      return 3;
    case ErrorKind::kNumeric:
      return 4;
    case ErrorKind::kDimension:
    case ErrorKind::kContract:
      return 2;
  }
  return 1;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

std::string Rng::save_state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::load_state(const std::string& state) {
  std::istringstream in(state);
  in >> engine_;
  if (!in) throw data_error("corrupt rng state");
}

}  // namespace ramat
