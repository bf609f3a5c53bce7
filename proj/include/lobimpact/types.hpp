#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace lobimpact {

// Event types at the best quotes. The "p" variants move the mid price.
enum class EventType : std::uint8_t { MO0 = 0, MOp = 1, CA0 = 2, LO0 = 3, CAp = 4, LOp = 5 };

inline constexpr int kNumTypes = 6;
inline constexpr int kNumPairs = kNumTypes * kNumTypes;

inline constexpr std::array<EventType, kNumTypes> kAllTypes = {
    EventType::MO0, EventType::MOp, EventType::CA0, EventType::LO0, EventType::CAp, EventType::LOp};
inline constexpr std::array<EventType, 3> kPriceChanging = {EventType::MOp, EventType::CAp, EventType::LOp};

constexpr int index_of(EventType t) { return static_cast<int>(t); }
constexpr EventType type_at(int i) { return static_cast<EventType>(i); }
constexpr int pair_index(int a, int b) { return a * kNumTypes + b; }

constexpr bool is_price_changing(EventType t) {
  return t == EventType::MOp || t == EventType::CAp || t == EventType::LOp;
}
constexpr bool is_limit_order(EventType t) { return t == EventType::LO0 || t == EventType::LOp; }

// +1 for types that widen the spread, -1 for LOp, 0 for the rest.
constexpr int spread_direction(EventType t) {
  if (t == EventType::MOp || t == EventType::CAp) return 1;
  if (t == EventType::LOp) return -1;
  return 0;
}

// Book side of an event: the sign itself for market orders and cancellations,
// the opposite for limit orders (bid = -1, ask = +1).
constexpr int derive_side(EventType t, int sign) { return is_limit_order(t) ? -sign : sign; }

// Names as used in files: MO0, MOP, CA0, LO0, CAP, LOP.
std::string_view type_name(EventType t);
// Throws std::invalid_argument on unknown names.
EventType parse_type(std::string_view name);
// "MO0->MOP"
std::string pair_name(int a, int b);

// Lag-indexed curves. Column = lag, row = type or ordered type pair.
using TypeVector = Eigen::Array<double, kNumTypes, 1>;
using TypeCurves = Eigen::Array<double, kNumTypes, Eigen::Dynamic>;
using PairCurves = Eigen::Array<double, kNumPairs, Eigen::Dynamic>;
using LagVector = Eigen::ArrayXd;

}  // namespace lobimpact
