#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "candlib.hpp"
#include "fft.hpp"
#include "field.hpp"

namespace fdi {

/// Keep DFT modes k in {0, +-1, ..., +-(K_a - 1)} along axis a.
struct CutoffSpec {
  std::vector<std::size_t> modes;

  void validate(const std::vector<std::size_t>& dims) const;
  bool operator==(const CutoffSpec&) const = default;
};

/// Default retained-mode counts per axis, time last: {12, 4} in one spatial
/// dimension, {6, 6, 3} in two and {4, 4, 4, 3} in three.
CutoffSpec default_cutoff(std::size_t rank);
CutoffSpec parse_cutoff(const std::string& csv, std::size_t rank);

struct ComplexArray {
  std::vector<std::size_t> dims;
  std::vector<Complex> data;
};

ComplexArray dft_nd(const Field& f);

/// Retained mode tuples with conjugate duplicates removed, in row-major order
/// of the (2K_a - 1)-wide block. Component values are signed mode indices.
std::vector<std::vector<int>> retained_modes(const CutoffSpec& cut);

/// DFT coefficients of a real row-major array at the retained block only,
/// computed separably without a full transform. Output is the full
/// (2K_0-1) x ... x (2K_{n-1}-1) block in row-major order, signed indices
/// ascending along each axis.
std::vector<Complex> low_block_dft(std::span<const double> data, const std::vector<std::size_t>& dims,
                                   const CutoffSpec& cut);

/// Dense real least-squares system. Columns may be unit-normalized; the
/// original column norms are kept so physical coefficients are coefficient /
/// norm.
struct RealSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
  std::vector<std::string> column_names;
  Eigen::VectorXd column_norms;

  Eigen::Index rows() const noexcept { return matrix.rows(); }
  Eigen::Index cols() const noexcept { return matrix.cols(); }
  /// Sub-system with only the listed columns, in the listed order.
  RealSystem select(const std::vector<std::size_t>& columns) const;
};

struct FreqSystem {
  Eigen::MatrixXcd matrix;
  Eigen::VectorXcd rhs;
  std::vector<std::string> column_names;
  std::vector<std::vector<int>> mode_index_list;
  Eigen::VectorXd column_norms;

  /// Real and imaginary parts stacked row-wise, [Re; Im].
  RealSystem stacked() const;
};

FreqSystem assemble_freq_system(const EvaluatedLibrary& lib, const CutoffSpec& cut,
                                bool normalize = true);

/// Rows are grid samples taken every `sample_stride` points in flat order.
RealSystem assemble_timespace_system(const EvaluatedLibrary& lib, std::size_t sample_stride = 1,
                                     bool normalize = true);

/// Projects f onto the retained low-frequency block and returns the real part.
Field lowpass_filter(const Field& f, const CutoffSpec& cut);

struct SpectralErrorProfile {
  // Geometric mean of |noisy - clean| / |clean| over entries with nonzero
  // clean value; the arithmetic mean is swamped by near-zero denominators.
  double raw = 0.0;        // grid samples
  double time_only = 0.0;  // low time modes after DFT along t only
  double full = 0.0;       // retained modes after DFT along every axis
};

SpectralErrorProfile spectral_error_profile(const Field& clean, const Field& noisy,
                                            const TermDescriptor& term, const DiffConfig& cfg,
                                            const CutoffSpec& cut);

/// Writes (mode tuple, column, re, im) rows; the rhs appears as column "lhs".
void write_system_csv(const FreqSystem& sys, const std::string& path);

}  // namespace fdi
