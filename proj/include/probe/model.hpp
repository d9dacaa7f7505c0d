#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "probe/tensor.hpp"

namespace probe::model {

using nn::Tensor;

enum class ModelErrc {
    seq_too_long,
    divergence,
    corrupt_checkpoint,
    bad_config,
    bad_token,
    io_error,
};

struct ModelError : std::runtime_error {
    ModelErrc code;
    ModelError(ModelErrc c, const std::string& what) : std::runtime_error(what), code(c) {}
};

enum class Component { attn, mlp };
const char* to_string(Component c);

struct ModelConfig {
    int n_layers = 8;
    int d_model = 128;
    int n_heads = 4;
    int d_ff = 512;
    int vocab_size = 0;
    int max_seq_len = 128;
    uint64_t seed = 0;

    void validate() const;  // d_model % n_heads == 0, n_layers >= 2, ...
    bool operator==(const ModelConfig&) const = default;
    std::string to_json() const;
    static ModelConfig from_json(const std::string& s);
};

struct LayerParams {
    Tensor ln1_g, ln1_b;
    Tensor w_q, b_q, w_k, b_k, w_v, b_v;
    Tensor w_attn_out, b_attn_out;
    Tensor ln2_g, ln2_b;
    Tensor w_fc, b_fc;      // [d, d_ff]
    Tensor w_proj, b_proj;  // [d_ff, d]
};

// Pre-LN decoder-only transformer: LN -> attention -> add, LN -> MLP -> add,
// learned positional embeddings, untied unembedding.
struct TransformerParams {
    ModelConfig config;
    Tensor tok_emb;  // [V, d]
    Tensor pos_emb;  // [max_seq_len, d]
    std::vector<LayerParams> layers;
    Tensor lnf_g, lnf_b;
    Tensor w_unembed;  // [d, V]

    std::vector<std::pair<std::string, Tensor*>> named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
    bool all_finite() const;
};

// Gaussian init scaled by 1/sqrt(d_model), fully determined by config.seed.
TransformerParams init_params(const ModelConfig& config);

// Residual stream snapshots from one forward pass. Layer indices are
// 1-based; x_post(l) and x_pre(l+1) are the same stored tensor.
struct ResidualCache {
    int L = 0;
    int64_t t = 0;
    std::vector<Tensor> res;       // L+1 entries of [t, d]
    std::vector<Tensor> mid;       // L entries
    std::vector<Tensor> attn_out;  // L entries
    std::vector<Tensor> mlp_out;   // L entries
    Tensor logits;                 // [t, vocab]

    const Tensor& x_pre(int l) const { return res[static_cast<size_t>(l - 1)]; }
    const Tensor& x_mid(int l) const { return mid[static_cast<size_t>(l - 1)]; }
    const Tensor& x_post(int l) const { return res[static_cast<size_t>(l)]; }
};

// Replaces one component's output row before its residual addition.
struct PatchHook {
    int layer = 0;  // 1-based
    Component component = Component::attn;
    int64_t position = 0;
    const double* vec = nullptr;  // d_model values
};

struct ForwardOptions {
    const PatchHook* hook = nullptr;
    bool parallel_kernels = false;
};

ResidualCache forward_cached(const TransformerParams& params, const std::vector<int32_t>& tokens,
                             const ForwardOptions& opts = {});
Tensor forward(const TransformerParams& params, const std::vector<int32_t>& tokens);

// softmax of the final-position logits
std::vector<double> next_token_probs(const TransformerParams& params,
                                     const std::vector<int32_t>& tokens,
                                     const ForwardOptions& opts = {});

// argmax with ties broken by ascending token id
int32_t argmax_token(const double* v, int64_t n);

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

struct Hyper {
    int epochs = 40;
    int batch_size = 8;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip = 1.0;  // global norm
    uint64_t seed = 0;
    std::string to_json() const;
};

struct TrainResult {
    std::vector<double> epoch_losses;  // mean per-token next-token NLL
    int steps = 0;
    bool diverged = false;  // params hold the last finite state when set
};

// Adam with global-norm clipping; deterministic under hyper.seed and
// independent of the worker-thread count (batch gradients reduce in a fixed
// order).
TrainResult train(TransformerParams& params, const std::vector<std::vector<int32_t>>& dataset,
                  const Hyper& hyper);

// next-token loss of the tape-based training path, also used by grad_check
double sequence_loss(const TransformerParams& params, const std::vector<int32_t>& tokens);

// Max relative error between analytic gradients and central finite
// differences (h = 1e-5) over >= n_coords randomly sampled parameter
// coordinates. The denominator is floored at 1e-6 so that finite-difference
// noise on exactly-zero gradients does not register as error.
double grad_check(const TransformerParams& params, const std::vector<int32_t>& tokens,
                  int n_coords = 200, uint64_t seed = 0, double h = 1e-5);

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

// magic | version | config json | provenance json | named tensors | fnv1a64
void save_checkpoint(const TransformerParams& params, const std::string& path,
                     const std::string& provenance_json);
struct Checkpoint {
    TransformerParams params;
    std::string provenance_json;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace probe::model
