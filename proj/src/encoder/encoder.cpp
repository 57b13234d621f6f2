#include "stemsim/encoder/encoder.h"

#include <cmath>
#include <cstring>
#include <random>

#include "stemsim/error.h"

namespace stemsim::encoder {

int conv_output_size(int input, int kernel, int stride) {
  if (input < kernel || kernel <= 0 || stride <= 0) return 0;
  return (input - kernel) / stride + 1;
}

EncoderArch EncoderArch::standard(int input_height, int input_width) {
  EncoderArch a;
  a.input_height = input_height;
  a.input_width = input_width;
  for (int c : {32, 64, 128, 128}) a.blocks.push_back({c, 3, 3, 2, 2});
  a.embedding_dim = 128;
  return a;
}

std::vector<TensorShape> EncoderArch::shapes() const {
  std::vector<TensorShape> out{{1, input_height, input_width}};
  for (const auto& b : blocks) {
    const auto& prev = out.back();
    out.push_back({b.out_channels, conv_output_size(prev.height, b.kernel_h, b.stride_h),
                   conv_output_size(prev.width, b.kernel_w, b.stride_w)});
  }
  return out;
}

void EncoderArch::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::invalid_argument, "encoder: " + what); };
  if (input_height < 1 || input_width < 1) fail("input dimensions must be positive");
  if (blocks.empty()) fail("at least one convolution block is required");
  if (embedding_dim < 1) fail("embedding_dim must be positive");
  int h = input_height, w = input_width;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const std::string tag = "block " + std::to_string(i) + ": ";
    if (b.out_channels < 1) fail(tag + "out_channels must be positive");
    if (b.kernel_h < 1 || b.kernel_w < 1) fail(tag + "kernel must be positive");
    if (b.stride_h < 1 || b.stride_w < 1) fail(tag + "stride must be positive");
    h = conv_output_size(h, b.kernel_h, b.stride_h);
    w = conv_output_size(w, b.kernel_w, b.stride_w);
    if (h < 1 || w < 1) fail(tag + "spatial grid collapses for the configured input size");
  }
}

EncoderParams::EncoderParams(EncoderArch arch) : arch_(std::move(arch)) {
  arch_.validate();
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<int> shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    tensors_.push_back({std::move(name), std::move(shape), offset, n});
    offset += n;
  };
  int in_ch = 1;
  for (std::size_t i = 0; i < arch_.blocks.size(); ++i) {
    const auto& b = arch_.blocks[i];
    const std::string prefix = "conv" + std::to_string(i);
    add(prefix + ".weight", {b.out_channels, b.kernel_h, b.kernel_w, in_ch});
    add(prefix + ".bias", {b.out_channels});
    in_ch = b.out_channels;
  }
  add("fc.weight", {arch_.embedding_dim, in_ch});
  add("fc.bias", {arch_.embedding_dim});
  data_.assign(offset, 0.0);
}

std::span<const double> EncoderParams::tensor(std::size_t i) const {
  const auto& t = tensors_.at(i);
  return std::span<const double>(data_).subspan(t.offset, t.size);
}

Eigen::Map<const RowMatrix> EncoderParams::conv_weight(std::size_t block) const {
  const auto& t = tensors_.at(2 * block);
  return {data_.data() + t.offset, t.shape[0], static_cast<Eigen::Index>(t.size / t.shape[0])};
}

Eigen::Map<RowMatrix> EncoderParams::conv_weight(std::size_t block) {
  ++version_;
  const auto& t = tensors_.at(2 * block);
  return {data_.data() + t.offset, t.shape[0], static_cast<Eigen::Index>(t.size / t.shape[0])};
}

Eigen::Map<const Eigen::VectorXd> EncoderParams::conv_bias(std::size_t block) const {
  const auto& t = tensors_.at(2 * block + 1);
  return {data_.data() + t.offset, static_cast<Eigen::Index>(t.size)};
}

Eigen::Map<Eigen::VectorXd> EncoderParams::conv_bias(std::size_t block) {
  ++version_;
  const auto& t = tensors_.at(2 * block + 1);
  return {data_.data() + t.offset, static_cast<Eigen::Index>(t.size)};
}

Eigen::Map<const RowMatrix> EncoderParams::fc_weight() const {
  const auto& t = tensors_.at(tensors_.size() - 2);
  return {data_.data() + t.offset, t.shape[0], t.shape[1]};
}

Eigen::Map<RowMatrix> EncoderParams::fc_weight() {
  ++version_;
  const auto& t = tensors_.at(tensors_.size() - 2);
  return {data_.data() + t.offset, t.shape[0], t.shape[1]};
}

Eigen::Map<const Eigen::VectorXd> EncoderParams::fc_bias() const {
  const auto& t = tensors_.back();
  return {data_.data() + t.offset, static_cast<Eigen::Index>(t.size)};
}

Eigen::Map<Eigen::VectorXd> EncoderParams::fc_bias() {
  ++version_;
  const auto& t = tensors_.back();
  return {data_.data() + t.offset, static_cast<Eigen::Index>(t.size)};
}

void EncoderParams::set_zero() {
  ++version_;
  std::fill(data_.begin(), data_.end(), 0.0);
}

bool EncoderParams::same_layout(const EncoderParams& other) const {
  return arch_ == other.arch_ && data_.size() == other.data_.size();
}

EncoderParams& EncoderParams::operator+=(const EncoderParams& other) {
  if (!same_layout(other)) throw Error(ErrorKind::dimension_mismatch, "parameter layouts differ");
  ++version_;
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

EncoderParams& EncoderParams::operator*=(double scale) {
  ++version_;
  for (double& v : data_) v *= scale;
  return *this;
}

EncoderParams init_params(const EncoderArch& arch, std::uint64_t seed) {
  EncoderParams p(arch);
  std::mt19937_64 rng(seed);
  auto data = p.data();
  for (const auto& t : p.tensors()) {
    if (t.shape.size() < 2) continue;  // biases stay zero
    std::size_t fan_in = t.size / static_cast<std::size_t>(t.shape[0]);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (std::size_t i = 0; i < t.size; ++i) data[t.offset + i] = dist(rng);
  }
  return p;
}

namespace {

// Column p of `cols` holds the receptive field of output position p, ordered
// (dy, dx, channel) so each channel run is contiguous in both matrices.
void im2col(const Eigen::MatrixXd& act, const TensorShape& in, const ConvBlockSpec& b,
            const TensorShape& out, Eigen::MatrixXd& cols) {
  const int cin = in.channels;
  cols.resize(static_cast<Eigen::Index>(b.kernel_h) * b.kernel_w * cin,
              static_cast<Eigen::Index>(out.height) * out.width);
  const double* src = act.data();
  double* dst = cols.data();
  for (int oy = 0; oy < out.height; ++oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      for (int dy = 0; dy < b.kernel_h; ++dy) {
        const int y = oy * b.stride_h + dy;
        for (int dx = 0; dx < b.kernel_w; ++dx) {
          const int x = ox * b.stride_w + dx;
          std::memcpy(dst, src + (static_cast<std::size_t>(y) * in.width + x) * cin,
                      sizeof(double) * cin);
          dst += cin;
        }
      }
    }
  }
}

void col2im_add(const Eigen::MatrixXd& dcols, const TensorShape& in, const ConvBlockSpec& b,
                const TensorShape& out, Eigen::MatrixXd& dact) {
  const int cin = in.channels;
  dact.setZero(cin, static_cast<Eigen::Index>(in.height) * in.width);
  const double* src = dcols.data();
  double* dst = dact.data();
  for (int oy = 0; oy < out.height; ++oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      for (int dy = 0; dy < b.kernel_h; ++dy) {
        const int y = oy * b.stride_h + dy;
        for (int dx = 0; dx < b.kernel_w; ++dx) {
          const int x = ox * b.stride_w + dx;
          double* d = dst + (static_cast<std::size_t>(y) * in.width + x) * cin;
          for (int c = 0; c < cin; ++c) d[c] += src[c];
          src += cin;
        }
      }
    }
  }
}

void check_input(const EncoderArch& arch, const Eigen::MatrixXf& input) {
  if (input.rows() != arch.input_height || input.cols() != arch.input_width) {
    throw Error(ErrorKind::dimension_mismatch,
                "encoder expects " + std::to_string(arch.input_height) + "x" +
                    std::to_string(arch.input_width) + " input, got " +
                    std::to_string(input.rows()) + "x" + std::to_string(input.cols()));
  }
}

}  // namespace

void forward(const EncoderParams& params, const Eigen::MatrixXf& input, ForwardCache& cache) {
  const auto& arch = params.arch();
  check_input(arch, input);
  const auto shapes = arch.shapes();
  const std::size_t n_blocks = arch.blocks.size();
  cache.params = &params;
  cache.params_version = params.version();
  cache.columns.resize(n_blocks);
  cache.activations.resize(n_blocks);

  // Spatial index s = y * width + x; the input is one channel.
  Eigen::MatrixXd in_act(1, static_cast<Eigen::Index>(arch.input_height) * arch.input_width);
  for (int y = 0; y < arch.input_height; ++y) {
    for (int x = 0; x < arch.input_width; ++x) in_act(0, y * arch.input_width + x) = input(y, x);
  }

  const Eigen::MatrixXd* prev = &in_act;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    im2col(*prev, shapes[b], arch.blocks[b], shapes[b + 1], cache.columns[b]);
    auto& act = cache.activations[b];
    act.noalias() = params.conv_weight(b) * cache.columns[b];
    act.colwise() += params.conv_bias(b);
    act = act.cwiseMax(0.0);
    prev = &act;
  }

  cache.pooled = prev->rowwise().mean();
  cache.pre_norm = params.fc_weight() * cache.pooled + params.fc_bias();
  cache.norm = cache.pre_norm.norm();
  cache.degenerate = !(cache.norm >= kNormGuard);
  if (cache.degenerate) {
    cache.embedding = Eigen::VectorXd::Unit(arch.embedding_dim, 0);
  } else {
    cache.embedding = cache.pre_norm / cache.norm;
  }
}

Eigen::VectorXd forward(const EncoderParams& params, const Eigen::MatrixXf& input) {
  ForwardCache cache;
  forward(params, input, cache);
  return cache.embedding;
}

Eigen::VectorXd normalize_backward(const Eigen::VectorXd& embedding, double norm,
                                   const Eigen::VectorXd& grad_embedding) {
  return (grad_embedding - embedding * embedding.dot(grad_embedding)) / norm;
}

void backward_accumulate(const ForwardCache& cache, const Eigen::VectorXd& grad_embedding,
                         ParamGrads& grads) {
  if (cache.params == nullptr) throw Error(ErrorKind::precondition, "backward called without a forward cache");
  const EncoderParams& params = *cache.params;
  if (cache.params_version != params.version()) {
    throw Error(ErrorKind::precondition, "forward cache is stale: parameters changed since forward");
  }
  if (!grads.same_layout(params)) throw Error(ErrorKind::dimension_mismatch, "gradient layout differs from parameters");
  const auto& arch = params.arch();
  if (grad_embedding.size() != arch.embedding_dim ||
      cache.activations.size() != arch.blocks.size()) {
    throw Error(ErrorKind::dimension_mismatch, "upstream gradient or cache does not match the encoder");
  }
  if (cache.degenerate) return;

  const Eigen::VectorXd grad_v = normalize_backward(cache.embedding, cache.norm, grad_embedding);
  grads.fc_weight().noalias() += grad_v * cache.pooled.transpose();
  grads.fc_bias() += grad_v;
  const Eigen::VectorXd grad_pooled = params.fc_weight().transpose() * grad_v;

  const auto shapes = arch.shapes();
  const std::size_t n_blocks = arch.blocks.size();
  const auto& last = cache.activations.back();
  Eigen::MatrixXd grad_act = grad_pooled.replicate(1, last.cols()) / static_cast<double>(last.cols());
  Eigen::MatrixXd grad_cols;
  for (std::size_t b = n_blocks; b-- > 0;) {
    const auto& act = cache.activations[b];
    // ReLU: output > 0 exactly where the pre-activation was positive.
    grad_act = (act.array() > 0.0).select(grad_act, 0.0);
    grads.conv_weight(b).noalias() += grad_act * cache.columns[b].transpose();
    grads.conv_bias(b) += grad_act.rowwise().sum();
    if (b == 0) break;
    grad_cols.noalias() = params.conv_weight(b).transpose() * grad_act;
    col2im_add(grad_cols, shapes[b], arch.blocks[b], shapes[b + 1], grad_act);
  }
}

ParamGrads backward(const ForwardCache& cache, const Eigen::VectorXd& grad_embedding) {
  if (cache.params == nullptr) throw Error(ErrorKind::precondition, "backward called without a forward cache");
  ParamGrads grads(cache.params->arch());
  backward_accumulate(cache, grad_embedding, grads);
  return grads;
}

}  // namespace stemsim::encoder
