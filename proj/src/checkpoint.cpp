#include "sbmcov/errors.hpp"
#include "sbmcov/sbm.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

// Layout (little endian):
//   char[8]  magic "SBMCKPT\0"
//   u32      version (1), u32 reserved
//   u64      p, n_pairs, sweep, refresh_interval
//   f64      screen threshold
//   u64      rng seed, rng stream, rng counter; u64 rng half-block flag
//   f64      sigma lower triangle, row-major (row j holds columns 0..j)
//   f64      omega lower triangle, same order
//   u64 x 2  screened pairs (j, k), j < k, sorted
//   f64      phi per pair, then zeta per pair

namespace sbmcov {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic{'S', 'B', 'M', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InputError("checkpoint truncated");
  return v;
}

void put_lower(std::ofstream& out, const SymMatrix& m) {
  for (Index j = 0; j < m.dim(); ++j)
    for (Index k = 0; k <= j; ++k) put<double>(out, m(j, k));
}

SymMatrix get_lower(std::ifstream& in, Index p) {
  SymMatrix m(p);
  for (Index j = 0; j < p; ++j)
    for (Index k = 0; k <= j; ++k) m.storage()(j, k) = get<double>(in);
  m.symmetrize_from_lower();
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const GibbsState& state, const RngStream& rng) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint: " + path);
  const auto& pairs = state.screen->pairs();
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(state.sigma.dim()));
  put<std::uint64_t>(out, pairs.size());
  put<std::uint64_t>(out, static_cast<std::uint64_t>(state.sweep));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(state.refresh_interval));
  put<double>(out, state.screen->threshold());
  put<std::uint64_t>(out, rng.seed());
  put<std::uint64_t>(out, rng.stream());
  put<std::uint64_t>(out, rng.counter());
  put<std::uint64_t>(out, rng.half_used() ? 1 : 0);
  put_lower(out, state.sigma);
  put_lower(out, state.omega);
  for (const auto& [j, k] : pairs) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(j));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(k));
  }
  for (const double v : state.phi) put<double>(out, v);
  for (const double v : state.zeta) put<double>(out, v);
  if (!out) throw InputError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint: " + path);
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw InputError(path + " is not a chain checkpoint");
  if (get<std::uint32_t>(in) != kVersion) throw InputError(path + ": unsupported checkpoint version");
  get<std::uint32_t>(in);
  const auto p = static_cast<Index>(get<std::uint64_t>(in));
  const auto n_pairs = get<std::uint64_t>(in);
  const auto sweep = static_cast<long>(get<std::uint64_t>(in));
  const auto refresh = static_cast<long>(get<std::uint64_t>(in));
  const double threshold = get<double>(in);
  const auto seed = get<std::uint64_t>(in);
  const auto stream = get<std::uint64_t>(in);
  const auto counter = get<std::uint64_t>(in);
  const bool half = get<std::uint64_t>(in) != 0;

  Checkpoint ck;
  ck.state.sigma = get_lower(in, p);
  ck.state.omega = get_lower(in, p);
  std::vector<ScreenSet::Pair> pairs(n_pairs);
  for (auto& [j, k] : pairs) {
    j = static_cast<Index>(get<std::uint64_t>(in));
    k = static_cast<Index>(get<std::uint64_t>(in));
  }
  ck.state.screen = std::make_shared<const ScreenSet>(p, std::move(pairs), threshold);
  ck.state.phi.resize(n_pairs);
  ck.state.zeta.resize(n_pairs);
  for (auto& v : ck.state.phi) v = get<double>(in);
  for (auto& v : ck.state.zeta) v = get<double>(in);
  ck.state.sweep = sweep;
  ck.state.refresh_interval = refresh;
  ck.rng = RngStream(seed, stream);
  ck.rng.restore(counter, half);
  return ck;
}

}  // namespace sbmcov
