#pragma once

#include <fstream>
#include <string>

#include "json.hpp"
#include "txreid/binary_io.hpp"
#include "txreid/errors.hpp"
#include "txreid/txqda.hpp"

namespace txreid {

// TXM1 model container (all multi-byte values little-endian, doubles are raw
// IEEE-754 bit patterns, matrices row-major):
//   magic "TXM1", u32 version=1
//   u32 src1, src2, tgt1, tgt2
//   u32 iterations_run, u8 converged
//   config echo: i32 cfg_dim1, i32 cfg_dim2 (-1 = auto), u32 max_itr,
//                f64 epsilon, f64 lambda, u8 alignment (0=aligned, 1=all)
//   2 x (u32 count, f64[count])      retained eigenvalues per mode
//   u32 sweeps, sweeps x (f64, f64)  per-sweep eigenvalue sums
//   f64[tgt1*src1] P1, f64[tgt2*src2] P2, f64[(tgt1*tgt2)^2] metric

namespace detail {

inline void put_matrix(std::ostream& os, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) io::put_f64(os, m(i, j));
}

inline Matrix get_matrix(std::istream& is, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = io::get_f64(is);
  return m;
}

}  // namespace detail

inline void save_model(const TxqdaModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write model file: " + path);
  io::put_magic(out, "TXM1");
  io::put_u32(out, 1);
  io::put_u32(out, static_cast<std::uint32_t>(m.source_dim(1)));
  io::put_u32(out, static_cast<std::uint32_t>(m.source_dim(2)));
  io::put_u32(out, static_cast<std::uint32_t>(m.target_dim(1)));
  io::put_u32(out, static_cast<std::uint32_t>(m.target_dim(2)));
  io::put_u32(out, static_cast<std::uint32_t>(m.iterations_run));
  io::put_u8(out, m.converged ? 1 : 0);
  io::put_i32(out, m.config.target_dim1 ? *m.config.target_dim1 : -1);
  io::put_i32(out, m.config.target_dim2 ? *m.config.target_dim2 : -1);
  io::put_u32(out, static_cast<std::uint32_t>(m.config.max_itr));
  io::put_f64(out, m.config.epsilon);
  io::put_f64(out, m.config.lambda);
  io::put_u8(out, static_cast<std::uint8_t>(m.config.alignment));
  for (const auto& vals : m.mode_eigvals) {
    io::put_u32(out, static_cast<std::uint32_t>(vals.size()));
    for (double v : vals) io::put_f64(out, v);
  }
  io::put_u32(out, static_cast<std::uint32_t>(m.sweep_eigval_sums.size()));
  for (const auto& s : m.sweep_eigval_sums) {
    io::put_f64(out, s[0]);
    io::put_f64(out, s[1]);
  }
  detail::put_matrix(out, m.projections.p1);
  detail::put_matrix(out, m.projections.p2);
  detail::put_matrix(out, m.metric);
  if (!out) throw FormatError("write failed: " + path);
}

inline TxqdaModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file: " + path);
  io::expect_magic(in, "TXM1", path);
  if (io::get_u32(in) != 1) throw FormatError(path + ": unsupported TXM1 version");

  const Index src1 = static_cast<Index>(io::get_u32(in));
  const Index src2 = static_cast<Index>(io::get_u32(in));
  const Index tgt1 = static_cast<Index>(io::get_u32(in));
  const Index tgt2 = static_cast<Index>(io::get_u32(in));

  TxqdaModel m;
  m.iterations_run = static_cast<int>(io::get_u32(in));
  m.converged = io::get_u8(in) != 0;
  const std::int32_t cfg1 = io::get_i32(in);
  const std::int32_t cfg2 = io::get_i32(in);
  if (cfg1 >= 0) m.config.target_dim1 = cfg1;
  if (cfg2 >= 0) m.config.target_dim2 = cfg2;
  m.config.max_itr = static_cast<int>(io::get_u32(in));
  m.config.epsilon = io::get_f64(in);
  m.config.lambda = io::get_f64(in);
  const std::uint8_t align = io::get_u8(in);
  if (align > 1) throw FormatError(path + ": bad alignment byte");
  m.config.alignment = static_cast<PairAlignment>(align);
  for (auto& vals : m.mode_eigvals) {
    vals.resize(io::get_u32(in));
    for (double& v : vals) v = io::get_f64(in);
  }
  m.sweep_eigval_sums.resize(io::get_u32(in));
  for (auto& s : m.sweep_eigval_sums) {
    s[0] = io::get_f64(in);
    s[1] = io::get_f64(in);
  }
  m.projections.p1 = detail::get_matrix(in, tgt1, src1);
  m.projections.p2 = detail::get_matrix(in, tgt2, src2);
  m.metric = detail::get_matrix(in, tgt1 * tgt2, tgt1 * tgt2);
  if (!m.projections.p1.allFinite() || !m.projections.p2.allFinite() || !m.metric.allFinite()) {
    throw DataError(path + ": model contains non-finite values");
  }
  return m;
}

// Human-readable companion to the binary container.
inline nlohmann::ordered_json model_summary(const TxqdaModel& m) {
  nlohmann::ordered_json j;
  j["source_dims"] = {m.source_dim(1), m.source_dim(2)};
  j["target_dims"] = {m.target_dim(1), m.target_dim(2)};
  j["iterations_run"] = m.iterations_run;
  j["converged"] = m.converged;
  j["eigenvalues"]["mode1"] = m.mode_eigvals[0];
  j["eigenvalues"]["mode2"] = m.mode_eigvals[1];
  j["sweep_eigval_sums"] = m.sweep_eigval_sums;
  return j;
}

}  // namespace txreid
