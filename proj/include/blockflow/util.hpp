#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blockflow {

// Deterministic PRNG (xoshiro256++), independent of the standard library's
// distribution implementations so seeded runs reproduce byte-for-byte.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0);

  uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n);

  // Child stream derived by hashing; streams for distinct labels are
  // independent of draw order in the parent.
  static Rng derive(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0, uint64_t d = 0);

 private:
  uint64_t state_[4];
};

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
// Trim plus inner whitespace runs collapsed to single spaces.
std::string collapse_whitespace(std::string_view s);

// Lowercased maximal runs of word characters ([A-Za-z0-9_] and UTF-8 bytes).
std::vector<std::string> word_tokens(std::string_view text);

size_t levenshtein(std::string_view a, std::string_view b);

// Shortest round-trip decimal rendering (to_chars).
std::string format_double(double v);
std::optional<double> parse_double(std::string_view s);

// Spearman rank correlation; ties get average ranks.
double spearman_rho(std::span<const double> xs, std::span<const double> ys);
// Two-sided p-value for Spearman rho via the t approximation, n = sample size.
double spearman_pvalue(double rho, size_t n);

}  // namespace blockflow
