#include "model_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "btgp/error.hpp"

namespace btgp::cli {

static_assert(std::endian::native == std::endian::little,
              "model files are written in little-endian byte order");

namespace {

class Writer {
public:
  explicit Writer(std::ostream &out) : out_(out) {}

  template <typename T> void scalar(T v) {
    out_.write(reinterpret_cast<const char *>(&v), sizeof(T));
  }
  void string(const std::string &s) {
    scalar<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  template <typename T> void array(const T *data, std::size_t count) {
    out_.write(reinterpret_cast<const char *>(data),
               static_cast<std::streamsize>(count * sizeof(T)));
  }

private:
  std::ostream &out_;
};

class Reader {
public:
  explicit Reader(std::istream &in) : in_(in) {}

  template <typename T> T scalar() {
    T v{};
    read(&v, sizeof(T));
    return v;
  }
  std::string string() {
    const auto size = count(1);
    std::string s(size, '\0');
    read(s.data(), size);
    return s;
  }
  template <typename T> void array(T *data, std::size_t count) {
    read(data, count * sizeof(T));
  }
  // Length prefix, sanity-checked against a generous bound so corrupt files
  // fail cleanly instead of attempting huge allocations.
  std::size_t count(std::size_t element_size) {
    const auto n = scalar<std::uint64_t>();
    if (n > (std::uint64_t{1} << 40) / element_size) {
      throw DataError("model file: implausible length field " + std::to_string(n));
    }
    return static_cast<std::size_t>(n);
  }
  Index dimension() {
    const auto v = scalar<std::int64_t>();
    if (v < 0 || v > (std::int64_t{1} << 36)) {
      throw DataError("model file: implausible dimension " + std::to_string(v));
    }
    return static_cast<Index>(v);
  }

private:
  void read(void *dst, std::size_t bytes) {
    in_.read(static_cast<char *>(dst), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in_.gcount()) != bytes) {
      throw DataError("model file: unexpected end of file");
    }
  }

  std::istream &in_;
};

void write_encoding(Writer &w, const EncodingConfig &cfg) {
  w.scalar<std::int64_t>(cfg.dims);
  w.scalar<std::int32_t>(cfg.precision);
  w.scalar<std::uint8_t>(cfg.use_ecdf ? 1 : 0);
  for (Index k : cfg.bit_order) {
    w.scalar<std::int64_t>(k);
  }
  w.array(cfg.lower.data(), static_cast<std::size_t>(cfg.dims));
  w.array(cfg.upper.data(), static_cast<std::size_t>(cfg.dims));
  for (bool b : cfg.degenerate) {
    w.scalar<std::uint8_t>(b ? 1 : 0);
  }
  if (cfg.use_ecdf) {
    // Row-major: the 11 knots of dimension 0, then dimension 1, ...
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> knots =
        cfg.ecdf_knots;
    w.array(knots.data(), static_cast<std::size_t>(knots.size()));
  }
}

EncodingConfig read_encoding(Reader &r) {
  EncodingConfig cfg;
  cfg.dims = r.dimension();
  cfg.precision = r.scalar<std::int32_t>();
  if (cfg.precision < 1 || cfg.precision > 32) {
    throw DataError("model file: bad precision " + std::to_string(cfg.precision));
  }
  cfg.use_ecdf = r.scalar<std::uint8_t>() != 0;
  const Index q = cfg.bits();
  cfg.bit_order.resize(static_cast<std::size_t>(q));
  for (auto &k : cfg.bit_order) {
    k = r.scalar<std::int64_t>();
    if (k < 0 || k >= q) {
      throw DataError("model file: bit order entry out of range");
    }
  }
  cfg.lower.resize(cfg.dims);
  cfg.upper.resize(cfg.dims);
  r.array(cfg.lower.data(), static_cast<std::size_t>(cfg.dims));
  r.array(cfg.upper.data(), static_cast<std::size_t>(cfg.dims));
  cfg.degenerate.resize(static_cast<std::size_t>(cfg.dims));
  for (std::size_t d = 0; d < cfg.degenerate.size(); ++d) {
    cfg.degenerate[d] = r.scalar<std::uint8_t>() != 0;
  }
  if (cfg.use_ecdf) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> knots(cfg.dims,
                                                                                 kEcdfKnots);
    r.array(knots.data(), static_cast<std::size_t>(knots.size()));
    cfg.ecdf_knots = knots;
  }
  return cfg;
}

void write_member(Writer &w, const TrainedModel &m) {
  const Index n = m.size();
  const Index q = m.bits();
  w.scalar<std::int64_t>(n);
  w.scalar<std::int64_t>(q);
  w.array(m.params.phi.data(), static_cast<std::size_t>(q));
  w.scalar<double>(m.params.lambda);
  w.array(m.train_bits.data(), static_cast<std::size_t>(n * q));
  w.array(m.z.data(), static_cast<std::size_t>(n));
  w.scalar<double>(m.train_nll);
  w.scalar<double>(m.logdet);
  w.scalar<std::int32_t>(static_cast<std::int32_t>(m.status));
  w.scalar<std::int32_t>(m.iterations);
  w.scalar<std::int32_t>(m.tie_events);
  w.array(m.P.data(), static_cast<std::size_t>(n * q));
  w.array(m.Cinv.data(), static_cast<std::size_t>(n * q));
  w.array(m.Uinv.data(), static_cast<std::size_t>(n * q));
}

TrainedModel read_member(Reader &r, Index expected_bits) {
  TrainedModel m;
  const Index n = r.dimension();
  const Index q = r.dimension();
  if (q != expected_bits) {
    throw DataError("model file: member has " + std::to_string(q) + " bits, encoding has " +
                    std::to_string(expected_bits));
  }
  Eigen::VectorXd phi(q);
  r.array(phi.data(), static_cast<std::size_t>(q));
  const double lambda = r.scalar<double>();
  if (!phi.allFinite() || !(lambda > 0.0)) {
    throw DataError("model file: invalid kernel parameters");
  }
  m.params = params_from_phi(phi, lambda);
  m.train_bits.resize(n, q);
  r.array(m.train_bits.data(), static_cast<std::size_t>(n * q));
  m.z.resize(n);
  r.array(m.z.data(), static_cast<std::size_t>(n));
  m.train_nll = r.scalar<double>();
  m.logdet = r.scalar<double>();
  const auto status = r.scalar<std::int32_t>();
  if (status < 0 || status > static_cast<std::int32_t>(TrainStatus::diverged)) {
    throw DataError("model file: bad training status");
  }
  m.status = static_cast<TrainStatus>(status);
  m.iterations = r.scalar<std::int32_t>();
  m.tie_events = r.scalar<std::int32_t>();
  m.P.resize(n, q);
  m.Cinv.resize(n, q);
  m.Uinv.resize(n, q);
  r.array(m.P.data(), static_cast<std::size_t>(n * q));
  r.array(m.Cinv.data(), static_cast<std::size_t>(n * q));
  r.array(m.Uinv.data(), static_cast<std::size_t>(n * q));
  return m;
}

} // namespace

void save_model(const ModelBundle &model, std::ostream &out) {
  Writer w(out);
  w.array(kModelMagic, sizeof(kModelMagic));
  w.scalar<std::uint32_t>(kModelVersion);
  write_encoding(w, model.encoding);
  w.scalar<std::uint64_t>(model.features.size());
  for (const auto &f : model.features) {
    w.string(f);
  }
  w.string(model.target);
  w.scalar<double>(model.standardizer.mean);
  w.scalar<double>(model.standardizer.scale);
  w.scalar<std::uint8_t>(static_cast<std::uint8_t>(model.out_of_box));
  w.scalar<double>(model.ensemble.temperature);
  const auto members = model.ensemble.members.size();
  w.scalar<std::uint64_t>(members);
  w.array(model.ensemble.weights.data(), members);
  for (const auto &m : model.ensemble.members) {
    write_member(w, m);
  }
  if (!out) {
    throw DataError("model file: write failed");
  }
}

void save_model(const ModelBundle &model, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  save_model(model, out);
}

ModelBundle load_model(std::istream &in) {
  Reader r(in);
  char magic[sizeof(kModelMagic)];
  r.array(magic, sizeof(magic));
  if (std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw DataError("not a btgp model file (bad magic)");
  }
  const auto version = r.scalar<std::uint32_t>();
  if (version != kModelVersion) {
    throw DataError("unsupported model file version " + std::to_string(version));
  }
  ModelBundle model;
  model.encoding = read_encoding(r);
  model.features.resize(r.count(8));
  for (auto &f : model.features) {
    f = r.string();
  }
  if (static_cast<Index>(model.features.size()) != model.encoding.dims) {
    throw DataError("model file: feature names do not match encoding");
  }
  model.target = r.string();
  model.standardizer.mean = r.scalar<double>();
  model.standardizer.scale = r.scalar<double>();
  const auto mode = r.scalar<std::uint8_t>();
  if (mode > 1) {
    throw DataError("model file: bad out-of-box mode");
  }
  model.out_of_box = static_cast<OutOfBoxMode>(mode);
  model.ensemble.temperature = r.scalar<double>();
  const auto members = r.count(8);
  if (members == 0) {
    throw DataError("model file: no members");
  }
  model.ensemble.weights.resize(static_cast<Index>(members));
  r.array(model.ensemble.weights.data(), members);
  for (std::size_t k = 0; k < members; ++k) {
    auto member = read_member(r, model.encoding.bits());
    member.encoding = model.encoding;
    member.standardizer = model.standardizer;
    model.ensemble.members.push_back(std::move(member));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("model file: trailing bytes");
  }
  return model;
}

ModelBundle load_model(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  return load_model(in);
}

BundlePrediction predict_bundle(const ModelBundle &model, const Eigen::MatrixXd &X) {
  if (X.cols() != model.encoding.dims) {
    throw DimensionError("prediction data has " + std::to_string(X.cols()) +
                         " features, model expects " + std::to_string(model.encoding.dims));
  }
  const auto encoded = encode(X, model.encoding);
  BundlePrediction out;
  out.out_of_box = encoded.out_of_box;
  if (model.is_ensemble()) {
    out.mixture = ensemble_predict_standardized(model.ensemble, encoded.bits, encoded.out_of_box);
    out.standardized = out.mixture->mixture;
  } else {
    out.standardized =
        predict_standardized(model.ensemble.members.front(), encoded.bits, encoded.out_of_box);
  }
  const auto &s = model.standardizer;
  out.output.mu = s.invert(out.standardized.mu);
  out.output.sigma2 = out.standardized.sigma2 * (s.scale * s.scale);
  return out;
}

} // namespace btgp::cli
