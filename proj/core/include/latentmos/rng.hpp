#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace lmos {

/// Deterministic xoshiro256++ stream with Box-Muller normals.
///
/// Every consumer derives its own named substream from the experiment seed
/// (Rng::substream), so adding draws in one place never shifts another's
/// sequence. State round-trips through save()/restore() bit-exactly, which is
/// what makes checkpoint resume reproduce a continuous run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent generator for (seed, label); same inputs, same stream.
  static Rng substream(std::uint64_t seed, const std::string& label);

  std::uint64_t next_u64();
  double uniform();                  // [0, 1)
  double uniform(double lo, double hi);
  double normal();                   // standard normal, Box-Muller
  std::int64_t index(std::int64_t n);  // unbiased draw from {0, ..., n-1}

  /// Fisher-Yates shuffle.
  void shuffle(std::vector<int>& v);

  /// k distinct indices from {0, ..., n-1}, ascending.
  std::vector<int> sample_without_replacement(std::int64_t n, std::int64_t k);

  struct State {
    std::array<std::uint64_t, 4> s;
    bool has_spare;
    double spare;
  };
  State save() const;
  void restore(const State& st);

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64 step; used for seeding and substream derivation.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace lmos
