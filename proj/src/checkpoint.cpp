#include "hymflow/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "hymflow/flow.hpp"

namespace hymflow {

namespace {

constexpr char magic[4] = {'H', 'Y', 'M', 'F'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    v = to_little(v);
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const std::string& s) { buf_.append(s); }
  void block(const std::string& name, const std::vector<double>& data) {
    put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    bytes(name);
    put<std::uint64_t>(data.size());
    for (double x : data) put(x);
  }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }
  size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(size_t n) const {
    if (data_.size() - pos_ < n) {
      throw CheckpointError(CheckpointFailure::corrupt_header, "checkpoint is truncated");
    }
  }
  std::string data_;
  size_t pos_ = 0;
};

std::vector<double> flatten(const MatrixField& m) {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(m.sites()) * m.dim() * m.dim() * 2);
  for (Index s = 0; s < m.sites(); ++s)
    for (int i = 0; i < m.dim(); ++i)
      for (int j = 0; j < m.dim(); ++j) {
        const cplx z = m.entry(i, j)(s);
        out.push_back(z.real());
        out.push_back(z.imag());
      }
  return out;
}

MatrixField unflatten(const std::string& name, const std::vector<double>& data, Index sites,
                      int dim) {
  if (data.size() != static_cast<size_t>(sites) * dim * dim * 2) {
    throw CheckpointError(CheckpointFailure::shape_mismatch,
                          "block '" + name + "' has " + std::to_string(data.size()) +
                              " values, expected " + std::to_string(sites * dim * dim * 2));
  }
  MatrixField m(sites, dim);
  size_t k = 0;
  for (Index s = 0; s < sites; ++s)
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j, k += 2) m.entry(i, j)(s) = cplx(data[k], data[k + 1]);
  return m;
}

void put_form(Writer& w, const std::string& prefix, const FormField& f) {
  for (FormMask m : f.masks()) w.block(prefix + std::to_string(m), flatten(f[m]));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointFailure::io, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

Checkpoint make_checkpoint(const MetricField& metric, const BundleState& state, double t) {
  Checkpoint cp;
  cp.grid = metric.grid;
  cp.g = metric.g;
  cp.t = t;
  cp.H = state.H;
  cp.holomorphic_a = state.a;
  // The connection block holds the Chern connection of H in the H0-unitary
  // frame; H0 itself keeps its meaning as the reference metric.
  cp.connection = gauge_act(metric.grid, gauge_link(state.H, state.H0),
                            to_unitary_frame(metric.grid, state));
  return cp;
}

Checkpoint make_checkpoint(const MetricField& metric, const ConnectionState& state, double t) {
  Checkpoint cp;
  cp.grid = metric.grid;
  cp.g = metric.g;
  cp.t = t;
  cp.connection = state;
  return cp;
}

std::optional<BundleState> bundle_state(const Checkpoint& cp) {
  if (!cp.H) return std::nullopt;
  return BundleState{cp.holomorphic_a, cp.connection.fluxes, *cp.H, cp.connection.H0};
}

void write_checkpoint(const std::string& path, const Checkpoint& cp) {
  const int n = cp.grid.n;
  const int rank = cp.connection.rank();
  Writer w;
  w.bytes(std::string(magic, 4));
  w.put<std::uint32_t>(checkpoint_version);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(n));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cp.grid.N));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(rank));
  for (const auto& f : cp.connection.fluxes) {
    w.put<std::int64_t>(f[0]);
    w.put<std::int64_t>(f[1]);
  }
  w.block("periods", cp.grid.periods);
  w.block("t", {cp.t});
  w.block("g", flatten(cp.g));
  w.block("H0", flatten(cp.connection.H0));
  if (cp.H) w.block("H", flatten(*cp.H));
  put_form(w, "a.", cp.connection.a);
  if (cp.H) put_form(w, "hol.", cp.holomorphic_a);

  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(CheckpointFailure::io, "cannot write '" + tmp + "'");
    out.write(w.str().data(), static_cast<std::streamsize>(w.str().size()));
    if (!out) throw CheckpointError(CheckpointFailure::io, "short write to '" + tmp + "'");
  }
  std::filesystem::rename(tmp, target);
}

Checkpoint read_checkpoint(const std::string& path, const GridGeometry* expected) {
  Reader r(slurp(path));
  if (r.bytes(4) != std::string(magic, 4)) {
    throw CheckpointError(CheckpointFailure::corrupt_header, "'" + path + "' is not a HYMF file");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != checkpoint_version) {
    throw CheckpointError(CheckpointFailure::unknown_version,
                          "unknown checkpoint version " + std::to_string(version));
  }
  const auto n = r.get<std::uint32_t>();
  const auto N = r.get<std::uint32_t>();
  const auto rank = r.get<std::uint32_t>();
  if ((n != 1 && n != 2) || N < 8 || (N & (N - 1)) != 0 || N > 4096 || rank == 0 || rank > 64) {
    throw CheckpointError(CheckpointFailure::corrupt_header, "implausible checkpoint header");
  }
  if (expected && (static_cast<int>(n) != expected->n || static_cast<int>(N) != expected->N)) {
    throw CheckpointError(CheckpointFailure::shape_mismatch,
                          "checkpoint has n=" + std::to_string(n) + " N=" + std::to_string(N) +
                              ", expected n=" + std::to_string(expected->n) +
                              " N=" + std::to_string(expected->N));
  }
  std::vector<PlaneFluxes> fluxes(rank);
  for (auto& f : fluxes) {
    f[0] = static_cast<int>(r.get<std::int64_t>());
    f[1] = static_cast<int>(r.get<std::int64_t>());
  }

  std::map<std::string, std::vector<double>> blocks;
  while (!r.done()) {
    const auto len = r.get<std::uint32_t>();
    if (len > 256) throw CheckpointError(CheckpointFailure::corrupt_header, "bad block name");
    const std::string name = r.bytes(len);
    const auto count = r.get<std::uint64_t>();
    if (count > r.remaining() / sizeof(double)) {
      throw CheckpointError(CheckpointFailure::corrupt_header, "checkpoint is truncated");
    }
    std::vector<double> data(static_cast<size_t>(count));
    for (auto& x : data) x = r.get<double>();
    blocks[name] = std::move(data);
  }
  for (const char* name : {"periods", "t", "g", "H0"}) {
    if (!blocks.count(name)) {
      throw CheckpointError(CheckpointFailure::corrupt_header,
                            std::string("checkpoint lacks block '") + name + "'");
    }
  }
  if (blocks["periods"].size() != 2 * n || blocks["t"].size() != 1) {
    throw CheckpointError(CheckpointFailure::shape_mismatch, "bad periods or time block");
  }

  Checkpoint cp;
  cp.grid = build_torus_geometry(static_cast<int>(n), static_cast<int>(N), blocks["periods"]);
  const Index sites = cp.grid.sites();
  const int r_ = static_cast<int>(rank);
  cp.t = blocks["t"][0];
  cp.g = unflatten("g", blocks["g"], sites, static_cast<int>(n));
  cp.connection.fluxes = fluxes;
  cp.connection.H0 = unflatten("H0", blocks["H0"], sites, r_);
  cp.connection.a = FormField(static_cast<int>(n), sites, r_);
  if (blocks.count("H")) {
    cp.H = unflatten("H", blocks["H"], sites, r_);
    cp.holomorphic_a = FormField(static_cast<int>(n), sites, r_);
  }
  for (const auto& [name, data] : blocks) {
    FormField* target = nullptr;
    std::string mask;
    if (name.rfind("a.", 0) == 0) {
      target = &cp.connection.a;
      mask = name.substr(2);
    } else if (name.rfind("hol.", 0) == 0 && cp.H) {
      target = &cp.holomorphic_a;
      mask = name.substr(4);
    } else {
      continue;
    }
    const unsigned long m = std::stoul(mask);
    if (m >= (1u << (2 * n))) {
      throw CheckpointError(CheckpointFailure::corrupt_header, "bad form block '" + name + "'");
    }
    target->component(static_cast<FormMask>(m)) = unflatten(name, data, sites, r_);
  }
  return cp;
}

std::string format_csv(const std::vector<DiagnosticsRecord>& records) {
  std::ostringstream out;
  const auto& names = DiagnosticsRecord::field_names();
  for (size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << '\n' << std::setprecision(17);
  for (const auto& rec : records) {
    const auto v = rec.values();
    for (size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    out << '\n';
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << text;
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace hymflow
