#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "txreid/binary_io.hpp"
#include "txreid/errors.hpp"
#include "txreid/tensor.hpp"

namespace txreid {

enum class View : std::uint8_t { A = 0, B = 1 };

inline char view_tag(View v) { return v == View::A ? 'A' : 'B'; }

inline View parse_view(const std::string& s) {
  if (s == "A") return View::A;
  if (s == "B") return View::B;
  throw FormatError("unknown view tag '" + s + "' (expected A or B)");
}

enum class FeatureFormat : std::uint8_t { Csv, RawBinary };

inline FeatureFormat parse_feature_format(const std::string& s) {
  if (s == "csv") return FeatureFormat::Csv;
  if (s == "raw-binary") return FeatureFormat::RawBinary;
  throw UsageError("unknown feature format '" + s + "' (expected csv or raw-binary)");
}

// One descriptor vector for one person image.
struct FeatureRecord {
  int identity = 0;
  View view = View::A;
  std::vector<double> values;
};

// All records of one descriptor, as loaded from a file. Every vector has the
// same length `dim`; record order is preserved from the file.
struct FeatureSet {
  std::string descriptor;
  Index dim = 0;
  std::vector<FeatureRecord> records;

  Index count(View v) const {
    Index n = 0;
    for (const auto& r : records)
      if (r.view == v) ++n;
    return n;
  }
};

// 3-mode feature tensor for one camera view: (parts, part_len, persons) with
// one identity label per mode-3 slice. Labels may repeat in multi-shot data.
struct ViewTensor {
  Tensor3 tensor;
  std::vector<int> labels;
  View view = View::A;

  Index persons() const { return tensor.extent(3); }
  Index parts() const { return tensor.extent(1); }
  Index part_len() const { return tensor.extent(2); }
};

namespace detail {

inline std::string line_prefix(const std::string& path, int lineno) {
  return path + ", line " + std::to_string(lineno) + ": ";
}

inline double parse_double_field(const std::string& field, const std::string& ctx) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw FormatError(ctx + "cannot parse value '" + field + "'");
  if (!std::isfinite(v)) throw DataError(ctx + "non-finite value '" + field + "'");
  return v;
}

inline void append_double_text(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace detail

// CSV format: one record per line, `identity,view,f0,f1,...`; identity is a
// non-negative integer, view is A or B, no header, '.' decimal separator.
inline FeatureSet load_features_csv(const std::string& path, const std::string& descriptor = "") {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open feature file: " + path);

  FeatureSet fs;
  fs.descriptor = descriptor;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string ctx = detail::line_prefix(path, lineno);

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 3) throw FormatError(ctx + "expected identity,view,f0,...");

    FeatureRecord rec;
    {
      long long id = -1;
      const std::string& f = fields[0];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), id);
      if (ec != std::errc() || ptr != f.data() + f.size() || id < 0) {
        throw FormatError(ctx + "bad identity '" + f + "' (non-negative integer required)");
      }
      rec.identity = static_cast<int>(id);
    }
    try {
      rec.view = parse_view(fields[1]);
    } catch (const FormatError& e) {
      throw FormatError(ctx + e.what());
    }
    rec.values.reserve(fields.size() - 2);
    for (std::size_t i = 2; i < fields.size(); ++i) {
      rec.values.push_back(detail::parse_double_field(fields[i], ctx));
    }

    const Index d = static_cast<Index>(rec.values.size());
    if (fs.records.empty()) {
      fs.dim = d;
    } else if (d != fs.dim) {
      throw FormatError(ctx + "record has " + std::to_string(d) + " values, expected " +
                        std::to_string(fs.dim));
    }
    fs.records.push_back(std::move(rec));
  }
  if (fs.records.empty()) throw FormatError("no records in " + path);
  return fs;
}

inline void save_features_csv(const FeatureSet& fs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw FormatError("cannot write feature file: " + path);
  std::string line;
  for (const auto& r : fs.records) {
    line.clear();
    line += std::to_string(r.identity);
    line += ',';
    line += view_tag(r.view);
    for (double v : r.values) {
      line += ',';
      detail::append_double_text(line, v);
    }
    line += '\n';
    out << line;
  }
}

// Raw binary format TXF1: magic "TXF1", u32 record_count, u32 dim, then
// record_count records of (u32 identity, u8 view 0=A/1=B, dim f64 LE).
inline FeatureSet load_features_binary(const std::string& path, const std::string& descriptor = "") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature file: " + path);
  io::expect_magic(in, "TXF1", path);
  const std::uint32_t count = io::get_u32(in);
  const std::uint32_t dim = io::get_u32(in);
  if (count == 0) throw FormatError("no records in " + path);
  if (dim == 0) throw FormatError(path + ": zero feature dimension");

  FeatureSet fs;
  fs.descriptor = descriptor;
  fs.dim = static_cast<Index>(dim);
  fs.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    FeatureRecord rec;
    rec.identity = static_cast<int>(io::get_u32(in));
    const std::uint8_t v = io::get_u8(in);
    if (v > 1) throw FormatError(path + ": record " + std::to_string(i) + " has bad view byte");
    rec.view = static_cast<View>(v);
    rec.values.resize(dim);
    for (std::uint32_t j = 0; j < dim; ++j) {
      rec.values[j] = io::get_f64(in);
      if (!std::isfinite(rec.values[j])) {
        throw DataError(path + ": record " + std::to_string(i) + " has a non-finite value");
      }
    }
    fs.records.push_back(std::move(rec));
  }
  return fs;
}

inline void save_features_binary(const FeatureSet& fs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write feature file: " + path);
  io::put_magic(out, "TXF1");
  io::put_u32(out, static_cast<std::uint32_t>(fs.records.size()));
  io::put_u32(out, static_cast<std::uint32_t>(fs.dim));
  for (const auto& r : fs.records) {
    io::put_u32(out, static_cast<std::uint32_t>(r.identity));
    io::put_u8(out, static_cast<std::uint8_t>(r.view));
    for (double v : r.values) io::put_f64(out, v);
  }
}

inline FeatureSet load_features(const std::string& path, FeatureFormat format,
                                const std::string& descriptor = "") {
  return format == FeatureFormat::Csv ? load_features_csv(path, descriptor)
                                      : load_features_binary(path, descriptor);
}

inline void save_features(const FeatureSet& fs, const std::string& path, FeatureFormat format) {
  if (format == FeatureFormat::Csv) {
    save_features_csv(fs, path);
  } else {
    save_features_binary(fs, path);
  }
}

// Splits each record vector of the requested view into parts of length part_len
// (zero-padded up to parts*part_len) and stacks them as mode-3 slices in file
// order.
inline ViewTensor split_to_tensor(const FeatureSet& fs, View view, Index part_len) {
  if (part_len < 1) throw UsageError("split_to_tensor: part_len must be positive");

  std::vector<const FeatureRecord*> recs;
  for (const auto& r : fs.records)
    if (r.view == view) recs.push_back(&r);
  if (recs.empty()) {
    throw DataError("split_to_tensor: no records for view " + std::string(1, view_tag(view)) +
                    (fs.descriptor.empty() ? "" : " in descriptor '" + fs.descriptor + "'"));
  }

  const Index d = fs.dim;
  const Index parts = (d + part_len - 1) / part_len;
  ViewTensor vt;
  vt.view = view;
  vt.tensor = Tensor3(parts, part_len, static_cast<Index>(recs.size()));
  vt.labels.reserve(recs.size());
  for (Index p = 0; p < static_cast<Index>(recs.size()); ++p) {
    const auto& vals = recs[static_cast<std::size_t>(p)]->values;
    vt.labels.push_back(recs[static_cast<std::size_t>(p)]->identity);
    for (Index part = 0; part < parts; ++part) {
      for (Index f = 0; f < part_len; ++f) {
        const Index src = part * part_len + f;
        vt.tensor(part, f, p) = src < d ? vals[static_cast<std::size_t>(src)] : 0.0;
      }
    }
  }
  return vt;
}

// Concatenates two descriptor tensors of the same view along the parts mode;
// a's slices come first. Requires equal part lengths and identical label
// sequences.
inline ViewTensor fuse_tensors(const ViewTensor& a, const ViewTensor& b) {
  if (a.view != b.view) throw DataError("fuse_tensors: view mismatch");
  if (a.part_len() != b.part_len()) {
    throw ShapeError("fuse_tensors: part length mismatch: " + std::to_string(a.part_len()) +
                     " vs " + std::to_string(b.part_len()));
  }
  if (a.labels.size() != b.labels.size()) {
    throw DataError("fuse_tensors: person counts differ");
  }
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    if (a.labels[i] != b.labels[i]) {
      throw DataError("fuse_tensors: label sequences differ at slice " + std::to_string(i));
    }
  }

  const Index pa = a.parts(), pb = b.parts(), len = a.part_len(), n = a.persons();
  ViewTensor out;
  out.view = a.view;
  out.labels = a.labels;
  out.tensor = Tensor3(pa + pb, len, n);
  for (Index p = 0; p < n; ++p) {
    for (Index f = 0; f < len; ++f) {
      for (Index i = 0; i < pa; ++i) out.tensor(i, f, p) = a.tensor(i, f, p);
      for (Index i = 0; i < pb; ++i) out.tensor(pa + i, f, p) = b.tensor(i, f, p);
    }
  }
  return out;
}

// Keeps the slices whose label is in `keep`, preserving slice order.
inline ViewTensor select_identities(const ViewTensor& vt, const std::unordered_set<int>& keep) {
  std::vector<Index> take;
  for (Index p = 0; p < vt.persons(); ++p) {
    if (keep.count(vt.labels[static_cast<std::size_t>(p)]) > 0) take.push_back(p);
  }
  if (take.empty()) throw DataError("select_identities: no slices match the requested identities");

  ViewTensor out;
  out.view = vt.view;
  out.tensor = Tensor3(vt.parts(), vt.part_len(), static_cast<Index>(take.size()));
  for (Index q = 0; q < static_cast<Index>(take.size()); ++q) {
    const Index p = take[static_cast<std::size_t>(q)];
    out.labels.push_back(vt.labels[static_cast<std::size_t>(p)]);
    for (Index f = 0; f < vt.part_len(); ++f)
      for (Index i = 0; i < vt.parts(); ++i) out.tensor(i, f, q) = vt.tensor(i, f, p);
  }
  return out;
}

// TXT1 tensor container: magic "TXT1", u32 version, u8 view, u32 n1/n2/n3,
// n3 u32 labels, then n1*n2*n3 f64 entries in linear layout.
inline void save_view_tensor(const ViewTensor& vt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write tensor container: " + path);
  io::put_magic(out, "TXT1");
  io::put_u32(out, 1);
  io::put_u8(out, static_cast<std::uint8_t>(vt.view));
  for (int m = 1; m <= 3; ++m) io::put_u32(out, static_cast<std::uint32_t>(vt.tensor.extent(m)));
  for (int label : vt.labels) io::put_u32(out, static_cast<std::uint32_t>(label));
  for (double v : vt.tensor.data()) io::put_f64(out, v);
}

inline ViewTensor load_view_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open tensor container: " + path);
  io::expect_magic(in, "TXT1", path);
  const std::uint32_t version = io::get_u32(in);
  if (version != 1) throw FormatError(path + ": unsupported TXT1 version");
  ViewTensor vt;
  const std::uint8_t v = io::get_u8(in);
  if (v > 1) throw FormatError(path + ": bad view byte");
  vt.view = static_cast<View>(v);
  Dims3 dims;
  for (auto& d : dims) d = static_cast<Index>(io::get_u32(in));
  vt.labels.resize(static_cast<std::size_t>(dims[2]));
  for (auto& label : vt.labels) label = static_cast<int>(io::get_u32(in));
  std::vector<double> data(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]));
  for (auto& x : data) x = io::get_f64(in);
  vt.tensor = Tensor3::from_data(dims, std::move(data));
  return vt;
}

// Optional per-entry z-scoring, fitted on training persons of both views
// pooled together (population standard deviation). Entries with zero spread
// are only centered.
struct Standardizer {
  Matrix mean;    // parts x part_len
  Matrix stddev;  // parts x part_len

  static Standardizer fit(const ViewTensor& a, const ViewTensor& b) {
    if (a.parts() != b.parts() || a.part_len() != b.part_len()) {
      throw ShapeError("Standardizer::fit: tensor shapes differ across views");
    }
    const Index p = a.parts(), len = a.part_len();
    const double n = static_cast<double>(a.persons() + b.persons());
    Standardizer s;
    s.mean = Matrix::Zero(p, len);
    s.stddev = Matrix::Zero(p, len);
    for (const ViewTensor* vt : {&a, &b})
      for (Index k = 0; k < vt->persons(); ++k)
        for (Index j = 0; j < len; ++j)
          for (Index i = 0; i < p; ++i) s.mean(i, j) += vt->tensor(i, j, k);
    s.mean /= n;
    for (const ViewTensor* vt : {&a, &b})
      for (Index k = 0; k < vt->persons(); ++k)
        for (Index j = 0; j < len; ++j)
          for (Index i = 0; i < p; ++i) {
            const double d = vt->tensor(i, j, k) - s.mean(i, j);
            s.stddev(i, j) += d * d;
          }
    s.stddev = (s.stddev / n).cwiseSqrt();
    return s;
  }

  ViewTensor apply(const ViewTensor& vt) const {
    if (vt.parts() != mean.rows() || vt.part_len() != mean.cols()) {
      throw ShapeError("Standardizer::apply: tensor shape does not match the fitted shape");
    }
    ViewTensor out = vt;
    for (Index k = 0; k < vt.persons(); ++k)
      for (Index j = 0; j < vt.part_len(); ++j)
        for (Index i = 0; i < vt.parts(); ++i) {
          const double sd = stddev(i, j);
          out.tensor(i, j, k) = (vt.tensor(i, j, k) - mean(i, j)) / (sd > 0.0 ? sd : 1.0);
        }
    return out;
  }
};

}  // namespace txreid
