#include "kcontract/corpus.hpp"
#include "kcontract/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace kcontract {

namespace {

Mat scalar(cplx v) { return Mat::Constant(1, 1, v); }

Mat unit(int p, int i, int j) {
  Mat m = Mat::Zero(p, p);
  m(i, j) = 1.0;
  return m;
}

// Commuting diagonal pair conjugated by S.
std::vector<Mat> conjugated_pair(const Mat& S, const std::vector<cplx>& x, const std::vector<cplx>& y) {
  const int p = static_cast<int>(x.size());
  Mat dx = Mat::Zero(p, p), dy = Mat::Zero(p, p);
  for (int k = 0; k < p; ++k) {
    dx(k, k) = x[static_cast<std::size_t>(k)];
    dy(k, k) = y[static_cast<std::size_t>(k)];
  }
  const Mat Si = S.inverse();
  return {S * dx * Si, S * dy * Si};
}

Mat shift_matrix(int p) {
  Mat n = Mat::Zero(p, p);
  for (int k = 0; k + 1 < p; ++k) n(k, k + 1) = 1.0;
  return n;
}

}  // namespace

std::vector<std::string> corpus_kernel_keys() { return {"da", "dirichlet", "k2", "khalf"}; }

std::shared_ptr<const KernelSpec> corpus_kernel(const std::string& key, int horizon) {
  static std::mutex mu;
  static std::map<std::pair<std::string, int>, std::shared_ptr<const KernelSpec>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({key, horizon});
  if (it != cache.end()) return it->second;
  KernelSpec spec;
  if (key == "da")
    spec = drury_arveson_kernel(horizon);
  else if (key == "k2")
    spec = power_kernel(Rational(2), horizon);
  else if (key == "khalf")
    spec = power_kernel(Rational(1, 2), horizon);
  else if (key == "dirichlet")
    spec = dirichlet_kernel(horizon);
  else
    throw Error(ErrorKind::BadParameter, "unknown corpus kernel '" + key + "'");
  auto ptr = std::make_shared<const KernelSpec>(std::move(spec));
  cache.emplace(std::make_pair(key, horizon), ptr);
  return ptr;
}

std::vector<std::string> corpus_tuple_names() {
  return {"diag_pair_normal", "diag_pair_skew",      "jordan_0.4",          "lambda_0.3",
          "lambda_0.5",       "lambda_0.8i",         "nilpotent_pair_box",  "nilpotent_pair_rank1",
          "zero_d1",          "zero_d2",             "diag_triple",         "jordan3_0.3",
          "nilpotent_rank_deficient"};
}

std::vector<Mat> corpus_tuple(const std::string& name) {
  if (name == "lambda_0.3") return {scalar(0.3)};
  if (name == "lambda_0.5") return {scalar(0.5)};
  if (name == "lambda_0.8i") return {scalar(cplx(0.0, 0.8))};
  if (name == "jordan_0.4") {
    Mat j(2, 2);
    j << 0.4, 0.5, 0.0, 0.4;
    return {j};
  }
  if (name == "nilpotent_pair_rank1") {
    const double s = 0.4;
    return {s * unit(3, 0, 1), s * unit(3, 0, 2)};
  }
  if (name == "nilpotent_rank_deficient") {
    // the same shape with s = 1/sqrt(2): for the Drury-Arveson kernel the defect has rank 2
    const double s = 1.0 / std::sqrt(2.0);
    return {s * unit(3, 0, 1), s * unit(3, 0, 2)};
  }
  if (name == "nilpotent_pair_box") {
    // compressed backward shifts on span{1, z1, z2, z1 z2}
    const double s = 0.4;
    return {s * (unit(4, 0, 1) + unit(4, 2, 3)), s * (unit(4, 0, 2) + unit(4, 1, 3))};
  }
  if (name == "diag_pair_normal")
    return conjugated_pair(Mat::Identity(2, 2), {cplx(0.3, 0.0), cplx(-0.1, 0.2)}, {cplx(0.0, 0.2), cplx(0.25, 0.0)});
  if (name == "diag_pair_skew") {
    Mat S = Mat::Identity(2, 2);
    S(0, 1) = 0.3;
    return conjugated_pair(S, {cplx(0.3, 0.0), cplx(-0.1, 0.2)}, {cplx(0.0, 0.2), cplx(0.25, 0.0)});
  }
  if (name == "diag_triple") {
    const std::vector<std::vector<cplx>> spectrum = {
        {cplx(0.2, 0.0), cplx(-0.1, 0.1)}, {cplx(0.0, 0.1), cplx(0.2, 0.0)}, {cplx(0.15, 0.0), cplx(0.0, -0.2)}};
    Mat S = Mat::Identity(2, 2);
    S(1, 0) = 0.25;
    const Mat Si = S.inverse();
    std::vector<Mat> out;
    for (const auto& x : spectrum) {
      Mat dx = Mat::Zero(2, 2);
      dx(0, 0) = x[0];
      dx(1, 1) = x[1];
      out.push_back(S * dx * Si);
    }
    return out;
  }
  if (name == "jordan3_0.3") return {0.3 * Mat::Identity(3, 3) + 0.4 * shift_matrix(3)};
  if (name == "zero_d1") return {Mat::Zero(1, 1)};
  if (name == "zero_d2") return {Mat::Zero(1, 1), Mat::Zero(1, 1)};
  throw Error(ErrorKind::BadParameter, "unknown corpus tuple '" + name + "'");
}

std::vector<CorpusEntry> full_corpus() {
  std::vector<CorpusEntry> out;
  for (const std::string& k : corpus_kernel_keys()) {
    for (const std::string& t : corpus_tuple_names()) {
      if (t == "nilpotent_rank_deficient" && k != "da") continue;
      out.push_back({k + "_" + t, k, t});
    }
  }
  std::sort(out.begin(), out.end(), [](const CorpusEntry& a, const CorpusEntry& b) { return a.name < b.name; });
  return out;
}

std::optional<CorpusEntry> find_corpus_entry(const std::string& name) {
  for (const CorpusEntry& e : full_corpus())
    if (e.name == name) return e;
  return std::nullopt;
}

int choose_truncation(const OperatorTuple& T, const KernelSpec& kernel, const Mat& defect_op, double target_tail,
                      int min_N, int max_N) {
  max_N = std::min(max_N, kernel.max_degree - 1);
  const std::vector<double> res = pureness_residuals(T, kernel, defect_op, max_N);
  for (int n = std::max(min_N, 1); n <= max_N; ++n)
    if (res[static_cast<std::size_t>(n)] < target_tail) return n;
  return max_N;
}

std::vector<Mat> random_tuple(const std::string& cls, int d, int p, double scale, std::uint64_t seed) {
  if (!(scale > 0.0 && scale < 1.0)) throw Error(ErrorKind::BadParameter, "scale must lie in (0, 1)");
  if (d < 1 || p < 1) throw Error(ErrorKind::BadParameter, "d and p must be positive");
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  auto gauss = [&] { return cplx(g(rng), g(rng)); };

  if (cls == "nilpotent_pair") {
    if (d != 2 || p < 2) throw Error(ErrorKind::BadParameter, "nilpotent_pair needs d = 2 and p >= 2");
    const Mat n0 = shift_matrix(p);
    std::vector<Mat> out;
    for (int i = 0; i < 2; ++i) {
      Mat t = Mat::Zero(p, p), power = n0;
      for (int k = 1; k < p; ++k) {
        t += gauss() * power;
        power = power * n0;
      }
      out.push_back(t * (scale / std::sqrt(2.0) / op_norm(t)));
    }
    return out;
  }
  if (cls == "diagonalizable") {
    Mat G(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) G(i, j) = gauss();
    const Mat S = Mat::Identity(p, p) + 0.2 * G / op_norm(G);
    const Mat Si = S.inverse();
    std::vector<Vec> spectrum;
    for (int k = 0; k < p; ++k) spectrum.push_back(random_ball_point(d, scale, rng));
    std::vector<Mat> out;
    for (int i = 0; i < d; ++i) {
      Mat diag = Mat::Zero(p, p);
      for (int k = 0; k < p; ++k) diag(k, k) = spectrum[static_cast<std::size_t>(k)](i);
      out.push_back(S * diag * Si);
    }
    return out;
  }
  if (cls == "jordan") {
    if (d != 1 || p < 2) throw Error(ErrorKind::BadParameter, "jordan needs d = 1 and p >= 2");
    const cplx lambda = random_ball_point(1, scale, rng)(0);
    const double off = 0.5 * scale * (1.0 - std::abs(lambda));
    return {lambda * Mat::Identity(p, p) + off * shift_matrix(p)};
  }
  throw Error(ErrorKind::BadParameter, "unknown random tuple class '" + cls + "'");
}

}  // namespace kcontract
