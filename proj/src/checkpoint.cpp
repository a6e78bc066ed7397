#include "qrotor/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "qrotor/error.hpp"

namespace qrotor {

namespace {

constexpr char kMagic[8] = {'Q', 'R', 'O', 'T', 'O', 'R', 'C', 'K'};

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("checkpoint: cannot write " + path);
  }
  template <class T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void ints(const std::vector<int>& v) {
    pod<std::uint64_t>(v.size());
    for (int x : v) pod<std::int32_t>(x);
  }
  void complex_array(const std::vector<cplx>& v) {
    pod<std::uint64_t>(v.size());
    for (const cplx& z : v) {
      pod(z.real());
      pod(z.imag());
    }
  }
  void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void finish() {
    out_.flush();
    if (!out_) throw ConfigError("checkpoint: write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw ConfigError("checkpoint: cannot open " + path);
  }
  template <class T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw ConfigError("checkpoint: truncated file");
    return v;
  }
  std::uint64_t count() {
    const auto n = pod<std::uint64_t>();
    if (n > (1ULL << 32)) throw ConfigError("checkpoint: corrupt length field");
    return n;
  }
  std::string str() {
    std::string s(count(), '\0');
    in_.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (!in_) throw ConfigError("checkpoint: truncated file");
    return s;
  }
  std::vector<int> ints() {
    std::vector<int> v(count());
    for (int& x : v) x = pod<std::int32_t>();
    return v;
  }
  std::vector<cplx> complex_array() {
    std::vector<cplx> v(count());
    for (cplx& z : v) {
      const double re = pod<double>();
      const double im = pod<double>();
      z = {re, im};
    }
    return v;
  }
  void raw(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (!in_) throw ConfigError("checkpoint: truncated file");
  }

 private:
  std::ifstream in_;
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  Writer w(path);
  w.raw(kMagic, sizeof kMagic);
  w.pod(kCheckpointVersion);
  w.str(ck.stage);
  w.str(to_string(ck.spec.kind));
  w.ints(ck.dims);
  std::vector<int> per(ck.periodic.begin(), ck.periodic.end());
  w.ints(per);
  const auto& cnn = ck.spec.cnn;
  const auto& rbm = ck.spec.rbm;
  w.ints({cnn.depth, cnn.fourier_modes, cnn.kernel_size, cnn.channels});
  w.ints({rbm.hidden, rbm.convolutional, rbm.conv_channels, rbm.kernel_size, rbm.visible_bias,
          rbm.hidden_bias});
  w.pod<std::uint64_t>(ck.layout.size());
  for (const ParamBlock& b : ck.layout) {
    w.str(b.name);
    w.ints(b.shape);
    w.pod<std::uint64_t>(b.offset);
  }
  w.complex_array(ck.alpha);
  w.complex_array(ck.alpha_ref);
  w.pod(ck.t);
  w.pod(ck.step);
  w.pod(ck.dt_next);
  w.pod(ck.dt_last);
  w.pod(ck.R2);
  w.pod(ck.r2_last);
  w.finish();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[sizeof kMagic];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw ConfigError("checkpoint: " + path + " is not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw ConfigError("checkpoint: unsupported format version " + std::to_string(version));

  Checkpoint ck;
  ck.stage = r.str();
  ck.spec.kind = ansatz_kind_from_string(r.str());
  ck.dims = r.ints();
  for (int p : r.ints()) ck.periodic.push_back(p != 0);
  const auto c = r.ints();
  const auto h = r.ints();
  if (c.size() != 4 || h.size() != 6) throw ConfigError("checkpoint: bad hyperparameter block");
  ck.spec.cnn = {c[0], c[1], c[2], c[3]};
  ck.spec.rbm = {h[0], h[1] != 0, h[2], h[3], h[4] != 0, h[5] != 0};
  const auto nblocks = r.count();
  for (std::uint64_t i = 0; i < nblocks; ++i) {
    ParamBlock b;
    b.name = r.str();
    b.shape = r.ints();
    b.offset = r.pod<std::uint64_t>();
    ck.layout.push_back(std::move(b));
  }
  ck.alpha = r.complex_array();
  ck.alpha_ref = r.complex_array();
  ck.t = r.pod<double>();
  ck.step = r.pod<std::uint64_t>();
  ck.dt_next = r.pod<double>();
  ck.dt_last = r.pod<double>();
  ck.R2 = r.pod<double>();
  ck.r2_last = r.pod<double>();
  return ck;
}

Checkpoint make_checkpoint(const VariationalState& state, const std::string& stage) {
  Checkpoint ck;
  ck.stage = stage;
  ck.spec = state.model->spec();
  ck.dims = state.model->lattice().dims();
  ck.periodic = state.model->lattice().periodic();
  ck.layout = state.model->layout();
  ck.alpha = state.alpha;
  return ck;
}

VariationalState restore_state(const Checkpoint& ck) {
  auto model = make_ansatz(ck.spec, build_lattice(ck.dims, ck.periodic));
  const auto layout = model->layout();
  bool same = layout.size() == ck.layout.size();
  for (std::size_t i = 0; same && i < layout.size(); ++i)
    same = layout[i].name == ck.layout[i].name && layout[i].shape == ck.layout[i].shape &&
           layout[i].offset == ck.layout[i].offset;
  if (!same) throw ConfigError("checkpoint: parameter layout does not match the ansatz");
  if (ck.alpha.size() != model->num_params())
    throw ConfigError("checkpoint: parameter count does not match the ansatz");
  return VariationalState{std::move(model), ck.alpha};
}

}  // namespace qrotor
