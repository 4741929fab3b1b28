/*
 * Copyright 2026 The Inferlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef INFERLAB_NN_HPP
#define INFERLAB_NN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "inferlab/common.hpp"

namespace inferlab::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Shape3 {
  int c = 1, h = 0, w = 0;
  int size() const { return c * h * w; }
};

enum class OpKind { Dense, Relu, Conv3x3, AvgPool2, ResidualDense };

struct Op {
  OpKind kind;
  int in_size = 0;
  int out_size = 0;
  Shape3 in_shape{};
  int aux = 0;  // conv: output channels; residual: hidden width
  std::size_t param_offset = 0;
  std::size_t param_count = 0;
};

// A feed-forward network as a flat tape of ops over one contiguous parameter
// vector. Forward/backward run per sample; backward recomputes cheap op
// internals from the cached op inputs, so the activation cache is just one
// vector per op. All methods that do not mutate parameters are reentrant.
class Network {
 public:
  void add_dense(int in, int out);
  void add_relu(int size);
  void add_conv3x3(Shape3 in, int out_channels);
  void add_avgpool2(Shape3 in);
  void add_residual_dense(int size, int hidden);
  void finalize(Rng& rng);  // allocate + He-initialize parameters

  int input_size() const;
  int output_size() const;
  std::size_t param_count() const { return params_.size(); }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  Vec forward(const Vec& x) const;
  Vec forward(const Vec& x, std::vector<Vec>& acts) const;

  // grad accumulates dL/dparams (must be zero-initialized to param_count()),
  // grad_input receives dL/dx when non-null.
  void backward(const std::vector<Vec>& acts, const Vec& grad_out, Vec& grad,
                Vec* grad_input = nullptr) const;

  // Input activation of the final dense op.
  Vec embedding(const Vec& x) const;
  int embedding_dim() const;
  // Parameter slice (offset, count) of the final dense op.
  std::pair<std::size_t, std::size_t> last_layer_slice() const;

  const std::vector<Op>& ops() const { return ops_; }

 private:
  int pending_out_() const;
  std::vector<Op> ops_;
  Vec params_;
  bool finalized_ = false;
};

Vec softmax(const Vec& logits);
double cross_entropy_from_probs(const Vec& probs, int label);
int argmax_lowest(const Vec& v);  // ties resolve to the lowest index
Vec one_hot(int label, int num_classes);

// Clips v to the given L2 norm in place; returns the original norm.
double clip_to_norm(Vec& v, double max_norm);

class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step(Vec& params, const Vec& grad);
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Vec m_, v_;
};

// Several input branches, each its own MLP, concatenated into one MLP head.
// Used by the membership attack models and the calibration encoder.
struct MultiBranchNet {
  std::vector<Network> branches;
  Network head;

  // concat(branch outputs) must equal head input size.
  void finalize_check() const;
  std::size_t param_count() const;
  Vec flat_params() const;
  void set_flat_params(const Vec& p);

  Vec forward(const std::vector<Vec>& inputs) const;
  // Returns head output; caches for backward.
  Vec forward(const std::vector<Vec>& inputs,
              std::vector<std::vector<Vec>>& branch_acts,
              std::vector<Vec>& head_acts) const;
  // grad must be zero-initialized to param_count(); layout is
  // [branch 0 params, branch 1 params, ..., head params].
  void backward(const std::vector<std::vector<Vec>>& branch_acts,
                const std::vector<Vec>& head_acts, const Vec& grad_out,
                Vec& grad) const;
};

double sigmoid(double x);

}  // namespace inferlab::nn

#endif  // INFERLAB_NN_HPP
