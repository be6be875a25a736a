#pragma once
// Linear models, 2-layer deep linear networks (DLN2) and 2-layer bias-free
// MLPs. Parameters live in one flat buffer so perturbations and norms are
// taken jointly over every block.
//
// A model with a single output is a binary classifier trained with the
// logistic loss on labels t in {-1, +1}. With K >= 2 outputs it is trained
// with softmax cross-entropy on class indices.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace snl {

enum class Family : std::uint32_t { Linear = 0, DLN2 = 1, MLP = 2 };
enum class Activation : std::uint32_t { ReLU = 0, Identity = 1 };

const char* to_string(Family f) noexcept;
Family family_from_string(const std::string& s);

class Model {
 public:
  Model() = default;

  // w has `outputs` rows of length dim.
  static Model linear(std::size_t dim, std::size_t outputs = 1);
  // f = V (W x), W is hidden x dim, V is outputs x hidden.
  static Model dln2(std::size_t dim, std::size_t hidden, std::size_t outputs = 1);
  // f = W2 act(W1 x), W1 is hidden x dim, W2 is outputs x hidden.
  static Model mlp(std::size_t dim, std::size_t hidden, std::size_t outputs,
                   Activation act = Activation::ReLU);

  Family family() const noexcept { return family_; }
  Activation activation() const noexcept { return act_; }
  std::size_t input_dim() const noexcept { return dim_; }
  std::size_t hidden_dim() const noexcept { return hidden_; }
  std::size_t output_dim() const noexcept { return outputs_; }
  bool binary() const noexcept { return outputs_ == 1; }
  bool has_hidden() const noexcept { return family_ != Family::Linear; }

  std::size_t param_count() const noexcept { return params_.size(); }
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  // Linear: the whole weight matrix. DLN2/MLP: W (hidden x dim).
  std::span<double> first_layer() noexcept { return {params_.data(), first_size()}; }
  std::span<const double> first_layer() const noexcept { return {params_.data(), first_size()}; }
  // DLN2/MLP only: V (outputs x hidden).
  std::span<double> last_layer() noexcept { return {params_.data() + first_size(), last_size()}; }
  std::span<const double> last_layer() const noexcept {
    return {params_.data() + first_size(), last_size()};
  }
  std::size_t first_size() const noexcept {
    return family_ == Family::Linear ? outputs_ * dim_ : hidden_ * dim_;
  }
  std::size_t last_size() const noexcept { return family_ == Family::Linear ? 0 : outputs_ * hidden_; }

  // Every parameter i.i.d. N(0, std^2). std == 0 gives the zero model.
  void init_normal(double std, std::uint64_t seed);
  // Per-layer N(0, 1/fan_in).
  void init_fan_in(std::uint64_t seed);

  bool operator==(const Model&) const = default;

 private:
  Model(Family f, Activation a, std::size_t dim, std::size_t hidden, std::size_t outputs);

  Family family_ = Family::Linear;
  Activation act_ = Activation::Identity;
  std::size_t dim_ = 0;
  std::size_t hidden_ = 0;
  std::size_t outputs_ = 1;
  std::vector<double> params_;
};

// Intermediate values of one forward pass.
struct Activations {
  std::vector<double> pre;     // W x (hidden models)
  std::vector<double> hidden;  // z = act(W x)
  std::vector<double> logits;  // f
};

void forward(const Model& model, std::span<const double> x, Activations& acts);
std::vector<double> forward(const Model& model, std::span<const double> x);

// Loss of the logits against label t and its derivative dloss/dlogits.
// Binary: softplus(-t f) and -t sigma(-t f). Multiclass: cross-entropy and
// softmax(f) - e_t.
double loss_cotangent(std::span<const double> logits, std::int64_t label, std::span<double> cotangent);
double loss_value(std::span<const double> logits, std::int64_t label);

// Logit scale: sigma(-t f) (one entry) or softmax(f) - e_t (K entries).
std::vector<double> logit_scale(std::span<const double> logits, std::int64_t label);

// Vector-Jacobian product at `model`: grad <- alpha * J^T out_cot, where an
// optional hidden_cot is added to the cotangent of z (the post-activation
// hidden layer). Accumulates into grad when `accumulate` is set.
void backward(const Model& model, std::span<const double> x, const Activations& acts,
              std::span<const double> out_cot, std::span<const double> hidden_cot, double alpha,
              std::span<double> grad, bool accumulate);

// Prediction: sign with sign(0) = +1 for binary, first argmax for multiclass.
std::int64_t predict(std::span<const double> logits);

// Scratch buffers for the per-example hot path.
struct Workspace {
  Activations acts;
  std::vector<double> cot;
  std::vector<double> hidden_cot;
  explicit Workspace(const Model& m);
  Workspace() = default;
};

// grad <- d loss / d params at (x, t), returns the loss.
double loss_gradient(const Model& model, std::span<const double> x, std::int64_t label, Workspace& ws,
                     std::span<double> grad);

// Per-example gradient factored into logit scale and network Jacobian.
//   binary:     grad = -t * logit_scale[0] * jacobian      (jacobian has P entries)
//   multiclass: grad = sum_k logit_scale[k] * jacobian[k]  (jacobian is K x P)
struct GradDecomp {
  std::vector<double> logit_scale;
  std::vector<double> jacobian;
  std::vector<double> grad;
  double loss = 0.0;
  double output = 0.0;  // binary logit, for convenience
};

GradDecomp grad_decomp(const Model& model, std::span<const double> x, std::int64_t label);

// Rebuilds the gradient from its two factors (the definition used by grad_decomp).
std::vector<double> assemble_gradient(std::span<const double> logit_scale, std::span<const double> jacobian,
                                      std::int64_t label, std::size_t param_count);

// Network Jacobian (per class for multiclass) via the closed forms of each family.
std::vector<double> network_jacobian(const Model& model, std::span<const double> x);

double param_norm(std::span<const double> v);

// Copy of `model` shifted by rho * direction / ||direction||. Throws
// DegenerateGradient when ||direction|| is numerically zero.
Model perturb(const Model& model, std::span<const double> direction, double rho);

// Below this joint norm a direction is treated as zero.
inline constexpr double kDegenerateNorm = 1e-300;

// Numerically stable logistic function.
double sigmoid(double x) noexcept;
// log(1 + exp(x)) without overflow.
double softplus(double x) noexcept;

void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace snl
