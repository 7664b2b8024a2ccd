#include "freqsys.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "error.hpp"

namespace fdi {

void CutoffSpec::validate(const std::vector<std::size_t>& dims) const {
  if (modes.size() != dims.size())
    fail(ErrorKind::invalid_argument, "cutoff needs " + std::to_string(dims.size()) +
                                          " per-axis mode counts, got " +
                                          std::to_string(modes.size()));
  for (std::size_t a = 0; a < dims.size(); ++a) {
    if (modes[a] < 1) fail(ErrorKind::invalid_argument, "cutoff mode counts must be >= 1");
    if (2 * modes[a] - 1 > dims[a])
      fail(ErrorKind::invalid_argument, "cutoff of " + std::to_string(modes[a]) +
                                            " modes exceeds axis length " +
                                            std::to_string(dims[a]));
  }
}

CutoffSpec default_cutoff(std::size_t rank) {
  switch (rank) {
    case 2: return {{12, 4}};
    case 3: return {{6, 6, 3}};
    case 4: return {{4, 4, 4, 3}};
    default: fail(ErrorKind::invalid_argument, "no default cutoff for this rank");
  }
}

CutoffSpec parse_cutoff(const std::string& csv, std::size_t rank) {
  CutoffSpec cut;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      const long v = std::stol(item);
      if (v < 1) throw std::invalid_argument("");
      cut.modes.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      fail(ErrorKind::invalid_argument, "bad cutoff entry '" + item + "'");
    }
  }
  // A single value applies to every axis.
  if (cut.modes.size() == 1 && rank > 1) cut.modes.assign(rank, cut.modes[0]);
  if (cut.modes.size() != rank)
    fail(ErrorKind::invalid_argument, "cutoff needs " + std::to_string(rank) + " entries");
  return cut;
}

ComplexArray dft_nd(const Field& f) {
  std::vector<Complex> in(f.data().begin(), f.data().end());
  return {f.dims(), fft_forward(f.dims(), in)};
}

std::vector<std::vector<int>> retained_modes(const CutoffSpec& cut) {
  const std::size_t n = cut.modes.size();
  std::size_t total = 1;
  for (auto k : cut.modes) total *= 2 * k - 1;
  // Row-major index i and its negation pair up as i <-> total-1-i, so the
  // first half plus the zero tuple is exactly one representative per pair.
  std::vector<std::vector<int>> out;
  out.reserve((total + 1) / 2);
  std::vector<int> tuple(n);
  for (std::size_t i = 0; i <= (total - 1) / 2; ++i) {
    std::size_t rem = i;
    for (std::size_t a = n; a-- > 0;) {
      const std::size_t w = 2 * cut.modes[a] - 1;
      tuple[a] = static_cast<int>(rem % w) - static_cast<int>(cut.modes[a] - 1);
      rem /= w;
    }
    out.push_back(tuple);
  }
  return out;
}

namespace {

/// DFT along one axis restricted to signed modes -(K-1)..(K-1).
std::vector<Complex> partial_dft_axis(const std::vector<Complex>& in, std::vector<std::size_t>& dims,
                                      std::size_t axis, std::size_t keep) {
  const std::size_t n = dims[axis];
  const std::size_t m = 2 * keep - 1;
  std::vector<Complex> twiddle(m * n);
  for (std::size_t k = 0; k < m; ++k) {
    const double freq = static_cast<double>(static_cast<long>(k) - static_cast<long>(keep - 1));
    for (std::size_t j = 0; j < n; ++j) {
      // Reduce the phase index modulo n before scaling for accuracy.
      const long idx = static_cast<long>(freq) * static_cast<long>(j);
      const long r = ((idx % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n);
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(n);
      twiddle[k * n + j] = std::polar(1.0, phase);
    }
  }
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < dims.size(); ++a) inner *= dims[a];
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= dims[a];
  std::vector<Complex> out(outer * m * inner, Complex{});
  for (std::size_t o = 0; o < outer; ++o) {
    const Complex* src = in.data() + o * n * inner;
    Complex* dst = out.data() + o * m * inner;
    for (std::size_t k = 0; k < m; ++k) {
      const Complex* tw = twiddle.data() + k * n;
      Complex* row = dst + k * inner;
      for (std::size_t j = 0; j < n; ++j) {
        const Complex w = tw[j];
        const Complex* s = src + j * inner;
        for (std::size_t i = 0; i < inner; ++i) row[i] += w * s[i];
      }
    }
  }
  dims[axis] = m;
  return out;
}

}  // namespace

std::vector<Complex> low_block_dft(std::span<const double> data, const std::vector<std::size_t>& dims,
                                   const CutoffSpec& cut) {
  cut.validate(dims);
  std::vector<Complex> work(data.begin(), data.end());
  auto d = dims;
  for (std::size_t a = dims.size(); a-- > 0;) work = partial_dft_axis(work, d, a, cut.modes[a]);
  return work;
}

RealSystem RealSystem::select(const std::vector<std::size_t>& columns) const {
  RealSystem out;
  out.matrix.resize(matrix.rows(), static_cast<Eigen::Index>(columns.size()));
  out.column_norms.resize(static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto src = static_cast<Eigen::Index>(columns[c]);
    out.matrix.col(static_cast<Eigen::Index>(c)) = matrix.col(src);
    out.column_norms(static_cast<Eigen::Index>(c)) = column_norms(src);
    out.column_names.push_back(column_names.at(columns[c]));
  }
  out.rhs = rhs;
  return out;
}

RealSystem FreqSystem::stacked() const {
  RealSystem out;
  const auto r = matrix.rows();
  out.matrix.resize(2 * r, matrix.cols());
  out.matrix.topRows(r) = matrix.real();
  out.matrix.bottomRows(r) = matrix.imag();
  out.rhs.resize(2 * r);
  out.rhs.head(r) = rhs.real();
  out.rhs.tail(r) = rhs.imag();
  out.column_names = column_names;
  out.column_norms = column_norms;
  return out;
}

namespace {

/// Flat offsets of the retained, non-redundant tuples inside the low block.
std::vector<std::size_t> retained_offsets(const CutoffSpec& cut) {
  const auto modes = retained_modes(cut);
  std::vector<std::size_t> out;
  out.reserve(modes.size());
  for (const auto& m : modes) {
    std::size_t off = 0;
    for (std::size_t a = 0; a < m.size(); ++a)
      off = off * (2 * cut.modes[a] - 1) + static_cast<std::size_t>(m[a] + static_cast<int>(cut.modes[a]) - 1);
    out.push_back(off);
  }
  return out;
}

}  // namespace

FreqSystem assemble_freq_system(const EvaluatedLibrary& lib, const CutoffSpec& cut, bool normalize) {
  cut.validate(lib.dims());
  const auto offsets = retained_offsets(cut);
  const auto rows = static_cast<Eigen::Index>(offsets.size());
  const auto cols = static_cast<Eigen::Index>(lib.term_count());
  FreqSystem sys;
  sys.mode_index_list = retained_modes(cut);
  sys.matrix.resize(rows, cols);
  sys.rhs.resize(rows);
  sys.column_norms = Eigen::VectorXd::Ones(cols);
  auto project = [&](const Field& f, auto&& sink) {
    const auto block = low_block_dft(f.data(), f.dims(), cut);
    for (Eigen::Index r = 0; r < rows; ++r) sink(r, block[offsets[static_cast<std::size_t>(r)]]);
  };
  for (Eigen::Index c = 0; c < cols; ++c) {
    project(lib.term(static_cast<std::size_t>(c)), [&](Eigen::Index r, Complex v) { sys.matrix(r, c) = v; });
    sys.column_names.push_back(lib.name(static_cast<std::size_t>(c)));
  }
  project(lib.lhs(), [&](Eigen::Index r, Complex v) { sys.rhs(r) = v; });
  if (rows < cols)
    fail(ErrorKind::invalid_argument, "cutoff retains " + std::to_string(rows) +
                                          " modes, fewer than the " + std::to_string(cols) +
                                          " library terms");
  if (normalize) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double norm = sys.matrix.col(c).norm();
      if (norm > 0.0) {
        sys.matrix.col(c) /= norm;
        sys.column_norms(c) = norm;
      }
    }
  }
  return sys;
}

RealSystem assemble_timespace_system(const EvaluatedLibrary& lib, std::size_t sample_stride,
                                     bool normalize) {
  if (sample_stride < 1) fail(ErrorKind::invalid_argument, "sample stride must be >= 1");
  const std::size_t total = lib.u().size();
  const auto rows = static_cast<Eigen::Index>((total + sample_stride - 1) / sample_stride);
  const auto cols = static_cast<Eigen::Index>(lib.term_count());
  if (rows < cols)
    fail(ErrorKind::invalid_argument, "sample stride leaves fewer rows than library terms");
  RealSystem sys;
  sys.matrix.resize(rows, cols);
  sys.rhs.resize(rows);
  sys.column_norms = Eigen::VectorXd::Ones(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const Field t = lib.term(static_cast<std::size_t>(c));
    for (Eigen::Index r = 0; r < rows; ++r) sys.matrix(r, c) = t[static_cast<std::size_t>(r) * sample_stride];
    sys.column_names.push_back(lib.name(static_cast<std::size_t>(c)));
  }
  for (Eigen::Index r = 0; r < rows; ++r) sys.rhs(r) = lib.lhs()[static_cast<std::size_t>(r) * sample_stride];
  if (normalize) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double norm = sys.matrix.col(c).norm();
      if (norm > 0.0) {
        sys.matrix.col(c) /= norm;
        sys.column_norms(c) = norm;
      }
    }
  }
  return sys;
}

Field lowpass_filter(const Field& f, const CutoffSpec& cut) {
  cut.validate(f.dims());
  auto spec = dft_nd(f);
  const auto& dims = spec.dims;
  const std::size_t n = dims.size();
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t i = 0; i < spec.data.size(); ++i) {
    bool keep = true;
    for (std::size_t a = 0; a < n && keep; ++a) {
      // Signed frequency of bin idx[a] is idx or idx - N.
      const std::size_t k = idx[a];
      const std::size_t dist = std::min(k, dims[a] - k);
      keep = dist + 1 <= cut.modes[a];
    }
    if (!keep) spec.data[i] = Complex{};
    for (std::size_t a = n; a-- > 0;) {
      if (++idx[a] < dims[a]) break;
      idx[a] = 0;
    }
  }
  const auto back = fft_inverse(dims, spec.data);
  std::vector<double> out(back.size());
  for (std::size_t i = 0; i < back.size(); ++i) out[i] = back[i].real();
  return f.with_data(std::move(out));
}

namespace {

template <typename T>
double geometric_relative_error(std::span<const T> noisy, std::span<const T> clean) {
  double log_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double denom = std::abs(clean[i]);
    if (denom == 0.0) continue;
    const double r = std::abs(noisy[i] - clean[i]) / denom;
    if (r == 0.0) return 0.0;
    log_sum += std::log(r);
    ++count;
  }
  return count ? std::exp(log_sum / static_cast<double>(count)) : 0.0;
}

Field single_term(const Field& f, const TermDescriptor& term, const DiffConfig& cfg) {
  LibrarySpec spec;
  spec.terms.push_back(term);
  const auto lib = evaluate_library(f, spec, cfg);
  return lib.term(0);
}

}  // namespace

SpectralErrorProfile spectral_error_profile(const Field& clean, const Field& noisy,
                                            const TermDescriptor& term, const DiffConfig& cfg,
                                            const CutoffSpec& cut) {
  if (clean.dims() != noisy.dims())
    fail(ErrorKind::invalid_argument, "clean and noisy fields differ in shape");
  const Field a = single_term(clean, term, cfg);
  const Field b = single_term(noisy, term, cfg);
  cut.validate(a.dims());
  SpectralErrorProfile out;
  out.raw = geometric_relative_error(b.data(), a.data());

  // Time-only: keep the non-negative low time modes at every spatial point;
  // the negative ones are their conjugates.
  const std::size_t t_axis = a.time_axis();
  auto time_block = [&](const Field& f) {
    std::vector<Complex> work(f.data().begin(), f.data().end());
    auto d = f.dims();
    work = partial_dft_axis(work, d, t_axis, cut.modes[t_axis]);
    std::vector<Complex> kept;
    const std::size_t m = d[t_axis];
    for (std::size_t i = 0; i < work.size(); ++i)
      if (i % m >= cut.modes[t_axis] - 1) kept.push_back(work[i]);
    return kept;
  };
  const auto ta = time_block(a);
  const auto tb = time_block(b);
  out.time_only = geometric_relative_error<Complex>(tb, ta);

  const auto offsets = retained_offsets(cut);
  const auto fa = low_block_dft(a.data(), a.dims(), cut);
  const auto fb = low_block_dft(b.data(), b.dims(), cut);
  std::vector<Complex> ra, rb;
  for (auto o : offsets) {
    ra.push_back(fa[o]);
    rb.push_back(fb[o]);
  }
  out.full = geometric_relative_error<Complex>(rb, ra);
  return out;
}

void write_system_csv(const FreqSystem& sys, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::io, "cannot open " + path);
  os.precision(17);
  os << "mode,column,re,im\n";
  auto mode_str = [](const std::vector<int>& m) {
    std::string s;
    for (std::size_t a = 0; a < m.size(); ++a) s += (a ? ":" : "") + std::to_string(m[a]);
    return s;
  };
  for (Eigen::Index r = 0; r < sys.matrix.rows(); ++r) {
    const auto mode = mode_str(sys.mode_index_list[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < sys.matrix.cols(); ++c)
      os << mode << ',' << sys.column_names[static_cast<std::size_t>(c)] << ','
         << sys.matrix(r, c).real() << ',' << sys.matrix(r, c).imag() << '\n';
    os << mode << ",lhs," << sys.rhs(r).real() << ',' << sys.rhs(r).imag() << '\n';
  }
}

}  // namespace fdi
