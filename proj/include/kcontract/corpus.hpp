#pragma once

// Built-in example corpus (kernels x tuples), seeded random tuple classes and the
// truncation-degree heuristic used by corpus runs.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kcontract/contraction.hpp"
#include "kcontract/series.hpp"

namespace kcontract {

constexpr int kDefaultHorizon = 128;

/// Kernel keys: "da", "k2", "khalf", "dirichlet". Results are cached per (key, horizon)
/// and shared between threads.
std::shared_ptr<const KernelSpec> corpus_kernel(const std::string& key, int horizon = kDefaultHorizon);
std::vector<std::string> corpus_kernel_keys();

/// Tuple names, e.g. "lambda_0.5", "jordan_0.4", "nilpotent_pair_box".
std::vector<std::string> corpus_tuple_names();
std::vector<Mat> corpus_tuple(const std::string& name);

struct CorpusEntry {
  std::string name;  // "<kernel>_<tuple>"
  std::string kernel_key;
  std::string tuple_name;
};

/// Every kernel x tuple pair plus kernel-specific extras, sorted by name.
std::vector<CorpusEntry> full_corpus();
std::optional<CorpusEntry> find_corpus_entry(const std::string& name);

/// Smallest N in [min_N, max_N] whose pureness residual is below target_tail, else max_N.
int choose_truncation(const OperatorTuple& T, const KernelSpec& kernel, const Mat& defect_op, double target_tail,
                      int min_N, int max_N);

/// Random tuple classes: "nilpotent_pair" (d = 2), "diagonalizable" (any d),
/// "jordan" (d = 1, p >= 2). Spectra and norms are controlled by `scale` in (0, 1).
std::vector<Mat> random_tuple(const std::string& cls, int d, int p, double scale, std::uint64_t seed);

}  // namespace kcontract
