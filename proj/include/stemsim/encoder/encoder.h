#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stemsim::encoder {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvBlockSpec {
  int out_channels = 32;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride_h = 2;
  int stride_w = 2;

  bool operator==(const ConvBlockSpec&) const = default;
};

struct TensorShape {
  int channels = 0;
  int height = 0;
  int width = 0;

  bool operator==(const TensorShape&) const = default;
};

// Stack of valid-padding strided convolutions, each followed by ReLU, then
// global average pooling, one fully connected layer and L2 normalization.
// The input is a single-channel n_mels x n_frames image.
struct EncoderArch {
  int input_height = 128;
  int input_width = 255;
  std::vector<ConvBlockSpec> blocks;
  int embedding_dim = 128;

  // Four 3x3 stride-2 blocks with 32, 64, 128, 128 channels and a 128-d output.
  static EncoderArch standard(int input_height, int input_width);

  // Throws invalid_argument when a kernel or stride is non-positive or the
  // spatial grid collapses below 1x1.
  void validate() const;
  // Shape after each block; element 0 is the input.
  std::vector<TensorShape> shapes() const;

  bool operator==(const EncoderArch&) const = default;
};

// floor((d - k) / s) + 1, or 0 when the kernel does not fit.
int conv_output_size(int input, int kernel, int stride);

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// All learnable tensors in one contiguous buffer, in declaration order:
// conv{i}.weight [out, kh, kw, in], conv{i}.bias [out], fc.weight [dim, in],
// fc.bias [dim]. Also used to hold gradients and optimizer moments.
class EncoderParams {
 public:
  EncoderParams() = default;
  explicit EncoderParams(EncoderArch arch);

  const EncoderArch& arch() const { return arch_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::size_t size() const { return data_.size(); }

  // Mutable access bumps version(), which lets backward() reject caches made
  // before the parameters changed.
  std::span<double> data() {
    ++version_;
    return data_;
  }
  std::span<const double> data() const { return data_; }
  std::uint64_t version() const { return version_; }

  Eigen::Map<const RowMatrix> conv_weight(std::size_t block) const;
  Eigen::Map<RowMatrix> conv_weight(std::size_t block);
  Eigen::Map<const Eigen::VectorXd> conv_bias(std::size_t block) const;
  Eigen::Map<Eigen::VectorXd> conv_bias(std::size_t block);
  Eigen::Map<const RowMatrix> fc_weight() const;
  Eigen::Map<RowMatrix> fc_weight();
  Eigen::Map<const Eigen::VectorXd> fc_bias() const;
  Eigen::Map<Eigen::VectorXd> fc_bias();

  std::span<const double> tensor(std::size_t i) const;

  void set_zero();
  bool same_layout(const EncoderParams& other) const;
  EncoderParams& operator+=(const EncoderParams& other);
  EncoderParams& operator*=(double scale);

 private:
  EncoderArch arch_;
  std::vector<TensorInfo> tensors_;
  // Aligned so vectorized reductions split the same way on every run.
  std::vector<double, Eigen::aligned_allocator<double>> data_;
  std::uint64_t version_ = 0;
};

using ParamGrads = EncoderParams;

// He initialization: N(0, 2 / fan_in) weights, zero biases.
EncoderParams init_params(const EncoderArch& arch, std::uint64_t seed);

inline constexpr double kNormGuard = 1e-12;

// Everything backward() needs from one forward pass.
struct ForwardCache {
  const EncoderParams* params = nullptr;
  std::uint64_t params_version = 0;
  std::vector<Eigen::MatrixXd> columns;      // im2col matrix per block, K x P
  std::vector<Eigen::MatrixXd> activations;  // post-ReLU output per block, C x P
  Eigen::VectorXd pooled;
  Eigen::VectorXd pre_norm;
  double norm = 0.0;
  bool degenerate = false;
  Eigen::VectorXd embedding;
};

// Valid-padding strided convolutions, ReLU, average pool, FC, L2 normalize.
// If the pre-normalization norm is below kNormGuard the output is e_1 and the
// backward pass propagates nothing.
void forward(const EncoderParams& params, const Eigen::MatrixXf& input, ForwardCache& cache);
Eigen::VectorXd forward(const EncoderParams& params, const Eigen::MatrixXf& input);

// Adds d(loss)/d(params) into `grads` given d(loss)/d(embedding).
void backward_accumulate(const ForwardCache& cache, const Eigen::VectorXd& grad_embedding,
                         ParamGrads& grads);
ParamGrads backward(const ForwardCache& cache, const Eigen::VectorXd& grad_embedding);

// Gradient through x -> x / |x| at x = v: (I - e e^T) g / |v|.
Eigen::VectorXd normalize_backward(const Eigen::VectorXd& embedding, double norm,
                                   const Eigen::VectorXd& grad_embedding);

}  // namespace stemsim::encoder
