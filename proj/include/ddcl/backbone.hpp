#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ddcl/matrix.hpp"
#include "ddcl/rng.hpp"

namespace ddcl {

struct MlpLayer {
  Matrix W;  // in x out
  Vec b;     // out
  // batch norm (hidden layers, or the output layer when output_norm is set)
  bool norm = false;
  bool affine = true;
  bool relu = false;
  Vec gamma, beta;
  Vec running_mean, running_var;
};

struct MlpParams {
  std::vector<MlpLayer> layers;
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
  double eps = 1e-5;

  std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().W.rows; }
  std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().W.cols; }
  std::size_t num_parameters() const;
};

struct MlpSpec {
  std::vector<std::size_t> dims;  // e.g. {64, 256, 128, 32}
  bool batchnorm = true;          // on hidden layers
  bool output_norm = false;       // non-affine batch norm after the last linear layer
};

// He-style fan-in Gaussian init; batch norm scale 1, shift 0.
MlpParams mlp_init(const MlpSpec& spec, Rng& rng);

enum class Mode { Train, Eval };

struct LayerCache {
  Matrix input;   // n x in
  Matrix pre;     // n x out, after linear
  Matrix xhat;    // n x out, normalized (norm layers)
  Vec inv_std;    // out
  Matrix post;    // n x out, layer output
};

struct ForwardCache {
  Mode mode = Mode::Eval;
  std::vector<LayerCache> layers;
};

// Train mode uses batch statistics and updates running stats; throws for n = 1.
Matrix mlp_forward(MlpParams& params, const Matrix& X, Mode mode, ForwardCache* cache = nullptr);
// Forward without touching running statistics.
Matrix mlp_forward_const(const MlpParams& params, const Matrix& X, Mode mode, ForwardCache* cache = nullptr);

struct MlpGrads {
  std::vector<Matrix> dW;
  std::vector<Vec> db, dgamma, dbeta;
  Matrix dX;
};

MlpGrads mlp_backward(const MlpParams& params, const ForwardCache& cache, const Matrix& grad_out);

struct SgdState {
  double lr = 0.01;
  double momentum = 0.0;
  std::vector<Matrix> vW;
  std::vector<Vec> vb, vg, vbeta;
};

void sgd_step(MlpParams& params, const MlpGrads& g, SgdState& state);

// sqrt(E |J v|^2) over Gaussian probes v, with J v by forward differences in
// eval mode at the single input z_probe.
double jacobian_norm_estimate(const MlpParams& params, const Vec& z_probe, int iters, std::uint64_t seed = 0,
                              double fd_step = 1e-6);

// Flat text checkpoint: header line then one value per line.
void save_checkpoint(const MlpParams& params, std::ostream& os);
MlpParams load_checkpoint(std::istream& is);

}  // namespace ddcl
