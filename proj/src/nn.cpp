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

#include "inferlab/nn.hpp"

#include <cmath>

namespace inferlab::nn {

namespace {

using MapMat = Eigen::Map<Mat>;
using CMapMat = Eigen::Map<const Mat>;
using MapVec = Eigen::Map<Vec>;
using CMapVec = Eigen::Map<const Vec>;

// Column-major patch matrix for 3x3 same-padding convolution.
Mat im2col3x3(const Vec& x, Shape3 s) {
  Mat patches(s.c * 9, s.h * s.w);
  patches.setZero();
  for (int r = 0; r < s.h; ++r) {
    for (int c = 0; c < s.w; ++c) {
      int col = r * s.w + c;
      for (int ci = 0; ci < s.c; ++ci) {
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            int rr = r + dr, cc = c + dc;
            if (rr < 0 || rr >= s.h || cc < 0 || cc >= s.w) continue;
            int row = ci * 9 + (dr + 1) * 3 + (dc + 1);
            patches(row, col) = x[(ci * s.h + rr) * s.w + cc];
          }
        }
      }
    }
  }
  return patches;
}

}  // namespace

int Network::pending_out_() const {
  return ops_.empty() ? -1 : ops_.back().out_size;
}

void Network::add_dense(int in, int out) {
  if (!ops_.empty() && pending_out_() != in)
    throw Error(ErrorCode::Internal, "dense input size mismatch");
  Op op;
  op.kind = OpKind::Dense;
  op.in_size = in;
  op.out_size = out;
  op.param_count = static_cast<std::size_t>(out) * in + out;
  ops_.push_back(op);
}

void Network::add_relu(int size) {
  if (!ops_.empty() && pending_out_() != size)
    throw Error(ErrorCode::Internal, "relu size mismatch");
  Op op;
  op.kind = OpKind::Relu;
  op.in_size = size;
  op.out_size = size;
  ops_.push_back(op);
}

void Network::add_conv3x3(Shape3 in, int out_channels) {
  if (!ops_.empty() && pending_out_() != in.size())
    throw Error(ErrorCode::Internal, "conv input size mismatch");
  Op op;
  op.kind = OpKind::Conv3x3;
  op.in_size = in.size();
  op.out_size = out_channels * in.h * in.w;
  op.in_shape = in;
  op.aux = out_channels;
  op.param_count = static_cast<std::size_t>(out_channels) * in.c * 9 +
                   out_channels;
  ops_.push_back(op);
}

void Network::add_avgpool2(Shape3 in) {
  if (in.h % 2 != 0 || in.w % 2 != 0)
    throw Error(ErrorCode::Internal, "avgpool needs even spatial dims");
  if (!ops_.empty() && pending_out_() != in.size())
    throw Error(ErrorCode::Internal, "pool input size mismatch");
  Op op;
  op.kind = OpKind::AvgPool2;
  op.in_size = in.size();
  op.out_size = in.c * (in.h / 2) * (in.w / 2);
  op.in_shape = in;
  ops_.push_back(op);
}

void Network::add_residual_dense(int size, int hidden) {
  if (!ops_.empty() && pending_out_() != size)
    throw Error(ErrorCode::Internal, "residual size mismatch");
  Op op;
  op.kind = OpKind::ResidualDense;
  op.in_size = size;
  op.out_size = size;
  op.aux = hidden;
  op.param_count = static_cast<std::size_t>(hidden) * size + hidden +
                   static_cast<std::size_t>(size) * hidden + size;
  ops_.push_back(op);
}

void Network::finalize(Rng& rng) {
  std::size_t total = 0;
  for (Op& op : ops_) {
    op.param_offset = total;
    total += op.param_count;
  }
  params_.resize(static_cast<Eigen::Index>(total));
  params_.setZero();
  for (const Op& op : ops_) {
    double* p = params_.data() + op.param_offset;
    auto he_fill = [&](double* w, std::size_t n, int fan_in) {
      double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (std::size_t i = 0; i < n; ++i) w[i] = scale * rng.normal();
    };
    switch (op.kind) {
      case OpKind::Dense:
        he_fill(p, static_cast<std::size_t>(op.out_size) * op.in_size,
                op.in_size);
        break;
      case OpKind::Conv3x3:
        he_fill(p, static_cast<std::size_t>(op.aux) * op.in_shape.c * 9,
                op.in_shape.c * 9);
        break;
      case OpKind::ResidualDense: {
        std::size_t w1 = static_cast<std::size_t>(op.aux) * op.in_size;
        he_fill(p, w1, op.in_size);
        he_fill(p + w1 + op.aux,
                static_cast<std::size_t>(op.in_size) * op.aux, op.aux);
        break;
      }
      default:
        break;
    }
  }
  finalized_ = true;
}

int Network::input_size() const {
  if (ops_.empty()) throw Error(ErrorCode::Internal, "empty network");
  return ops_.front().in_size;
}

int Network::output_size() const {
  if (ops_.empty()) throw Error(ErrorCode::Internal, "empty network");
  return ops_.back().out_size;
}

Vec Network::forward(const Vec& x) const {
  std::vector<Vec> acts;
  return forward(x, acts);
}

Vec Network::forward(const Vec& x, std::vector<Vec>& acts) const {
  if (!finalized_) throw Error(ErrorCode::Internal, "network not finalized");
  if (x.size() != input_size())
    throw Error(ErrorCode::Internal, "input size mismatch");
  acts.clear();
  acts.reserve(ops_.size());
  Vec cur = x;
  for (const Op& op : ops_) {
    acts.push_back(cur);
    const double* p = params_.data() + op.param_offset;
    switch (op.kind) {
      case OpKind::Dense: {
        CMapMat W(p, op.out_size, op.in_size);
        CMapVec b(p + static_cast<std::size_t>(op.out_size) * op.in_size,
                  op.out_size);
        cur = W * cur + b;
        break;
      }
      case OpKind::Relu:
        cur = cur.cwiseMax(0.0);
        break;
      case OpKind::Conv3x3: {
        const Shape3 s = op.in_shape;
        CMapMat W(p, op.aux, s.c * 9);
        CMapVec b(p + static_cast<std::size_t>(op.aux) * s.c * 9, op.aux);
        Mat y = W * im2col3x3(cur, s);
        y.colwise() += b;
        // y is (c_out x h*w); flatten channel-major.
        Vec flat(op.out_size);
        for (int ch = 0; ch < op.aux; ++ch)
          flat.segment(static_cast<Eigen::Index>(ch) * s.h * s.w,
                       s.h * s.w) = y.row(ch).transpose();
        cur = flat;
        break;
      }
      case OpKind::AvgPool2: {
        const Shape3 s = op.in_shape;
        int oh = s.h / 2, ow = s.w / 2;
        Vec out(op.out_size);
        for (int ci = 0; ci < s.c; ++ci)
          for (int r = 0; r < oh; ++r)
            for (int c = 0; c < ow; ++c) {
              double sum = 0;
              for (int dr = 0; dr < 2; ++dr)
                for (int dc = 0; dc < 2; ++dc)
                  sum += cur[(ci * s.h + 2 * r + dr) * s.w + 2 * c + dc];
              out[(ci * oh + r) * ow + c] = 0.25 * sum;
            }
        cur = out;
        break;
      }
      case OpKind::ResidualDense: {
        CMapMat W1(p, op.aux, op.in_size);
        CMapVec b1(p + static_cast<std::size_t>(op.aux) * op.in_size, op.aux);
        const double* p2 = p + static_cast<std::size_t>(op.aux) * op.in_size +
                           op.aux;
        CMapMat W2(p2, op.in_size, op.aux);
        CMapVec b2(p2 + static_cast<std::size_t>(op.in_size) * op.aux,
                   op.in_size);
        Vec h = (W1 * cur + b1).cwiseMax(0.0);
        cur = cur + W2 * h + b2;
        break;
      }
    }
  }
  return cur;
}

void Network::backward(const std::vector<Vec>& acts, const Vec& grad_out,
                       Vec& grad, Vec* grad_input) const {
  if (acts.size() != ops_.size())
    throw Error(ErrorCode::Internal, "activation cache size mismatch");
  if (grad.size() != params_.size())
    throw Error(ErrorCode::Internal, "gradient buffer size mismatch");

  Vec g = grad_out;
  for (std::size_t idx = ops_.size(); idx-- > 0;) {
    const Op& op = ops_[idx];
    const Vec& x = acts[idx];
    const double* p = params_.data() + op.param_offset;
    double* gp = grad.data() + op.param_offset;
    switch (op.kind) {
      case OpKind::Dense: {
        CMapMat W(p, op.out_size, op.in_size);
        MapMat dW(gp, op.out_size, op.in_size);
        MapVec db(gp + static_cast<std::size_t>(op.out_size) * op.in_size,
                  op.out_size);
        dW.noalias() += g * x.transpose();
        db += g;
        g = W.transpose() * g;
        break;
      }
      case OpKind::Relu:
        g = g.cwiseProduct(
            (x.array() > 0.0).cast<double>().matrix());
        break;
      case OpKind::Conv3x3: {
        const Shape3 s = op.in_shape;
        CMapMat W(p, op.aux, s.c * 9);
        MapMat dW(gp, op.aux, s.c * 9);
        MapVec db(gp + static_cast<std::size_t>(op.aux) * s.c * 9, op.aux);
        Mat gmat(op.aux, s.h * s.w);
        for (int ch = 0; ch < op.aux; ++ch)
          gmat.row(ch) = g.segment(static_cast<Eigen::Index>(ch) * s.h * s.w,
                                   s.h * s.w).transpose();
        Mat patches = im2col3x3(x, s);
        dW.noalias() += gmat * patches.transpose();
        db += gmat.rowwise().sum();
        Mat dpatches = W.transpose() * gmat;
        Vec dx = Vec::Zero(op.in_size);
        for (int r = 0; r < s.h; ++r)
          for (int c = 0; c < s.w; ++c) {
            int col = r * s.w + c;
            for (int ci = 0; ci < s.c; ++ci)
              for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                  int rr = r + dr, cc = c + dc;
                  if (rr < 0 || rr >= s.h || cc < 0 || cc >= s.w) continue;
                  dx[(ci * s.h + rr) * s.w + cc] +=
                      dpatches(ci * 9 + (dr + 1) * 3 + (dc + 1), col);
                }
          }
        g = dx;
        break;
      }
      case OpKind::AvgPool2: {
        const Shape3 s = op.in_shape;
        int oh = s.h / 2, ow = s.w / 2;
        Vec dx = Vec::Zero(op.in_size);
        for (int ci = 0; ci < s.c; ++ci)
          for (int r = 0; r < oh; ++r)
            for (int c = 0; c < ow; ++c) {
              double v = 0.25 * g[(ci * oh + r) * ow + c];
              for (int dr = 0; dr < 2; ++dr)
                for (int dc = 0; dc < 2; ++dc)
                  dx[(ci * s.h + 2 * r + dr) * s.w + 2 * c + dc] += v;
            }
        g = dx;
        break;
      }
      case OpKind::ResidualDense: {
        CMapMat W1(p, op.aux, op.in_size);
        CMapVec b1(p + static_cast<std::size_t>(op.aux) * op.in_size, op.aux);
        const double* p2 = p + static_cast<std::size_t>(op.aux) * op.in_size +
                           op.aux;
        CMapMat W2(p2, op.in_size, op.aux);
        double* gp2 = gp + static_cast<std::size_t>(op.aux) * op.in_size +
                      op.aux;
        MapMat dW1(gp, op.aux, op.in_size);
        MapVec db1(gp + static_cast<std::size_t>(op.aux) * op.in_size,
                   op.aux);
        MapMat dW2(gp2, op.in_size, op.aux);
        MapVec db2(gp2 + static_cast<std::size_t>(op.in_size) * op.aux,
                   op.in_size);
        Vec pre = W1 * x + b1;
        Vec h = pre.cwiseMax(0.0);
        Vec dh = W2.transpose() * g;
        Vec dpre = dh.cwiseProduct(
            (pre.array() > 0.0).cast<double>().matrix());
        dW2.noalias() += g * h.transpose();
        db2 += g;
        dW1.noalias() += dpre * x.transpose();
        db1 += dpre;
        g = g + W1.transpose() * dpre;
        break;
      }
    }
  }
  if (grad_input) *grad_input = g;
}

Vec Network::embedding(const Vec& x) const {
  std::vector<Vec> acts;
  forward(x, acts);
  std::size_t idx = ops_.size();
  while (idx-- > 0)
    if (ops_[idx].kind == OpKind::Dense) return acts[idx];
  throw Error(ErrorCode::Internal, "network has no dense op");
}

int Network::embedding_dim() const {
  std::size_t idx = ops_.size();
  while (idx-- > 0)
    if (ops_[idx].kind == OpKind::Dense) return ops_[idx].in_size;
  throw Error(ErrorCode::Internal, "network has no dense op");
}

std::pair<std::size_t, std::size_t> Network::last_layer_slice() const {
  std::size_t idx = ops_.size();
  while (idx-- > 0)
    if (ops_[idx].kind == OpKind::Dense)
      return {ops_[idx].param_offset, ops_[idx].param_count};
  throw Error(ErrorCode::Internal, "network has no dense op");
}

Vec softmax(const Vec& logits) {
  Vec shifted = logits.array() - logits.maxCoeff();
  Vec e = shifted.array().exp();
  return e / e.sum();
}

double cross_entropy_from_probs(const Vec& probs, int label) {
  if (label < 0 || label >= probs.size())
    throw Error(ErrorCode::Internal, "label outside posterior range");
  return -std::log(std::max(probs[label], 1e-300));
}

int argmax_lowest(const Vec& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

Vec one_hot(int label, int num_classes) {
  Vec v = Vec::Zero(num_classes);
  v[label] = 1.0;
  return v;
}

double clip_to_norm(Vec& v, double max_norm) {
  double norm = v.norm();
  if (norm > max_norm && norm > 0.0) v *= max_norm / norm;
  return norm;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_ = Vec::Zero(static_cast<Eigen::Index>(n));
  v_ = Vec::Zero(static_cast<Eigen::Index>(n));
}

void Adam::step(Vec& params, const Vec& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw Error(ErrorCode::Internal, "adam size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  Vec mhat = m_ / bc1;
  Vec vhat = v_ / bc2;
  params -= lr_ * mhat.cwiseQuotient(vhat.cwiseSqrt().array().matrix() +
                                     Vec::Constant(m_.size(), eps_));
}

void MultiBranchNet::finalize_check() const {
  int total = 0;
  for (const Network& b : branches) total += b.output_size();
  if (total != head.input_size())
    throw Error(ErrorCode::Internal,
                "branch outputs do not match head input");
}

std::size_t MultiBranchNet::param_count() const {
  std::size_t n = head.param_count();
  for (const Network& b : branches) n += b.param_count();
  return n;
}

Vec MultiBranchNet::flat_params() const {
  Vec out(static_cast<Eigen::Index>(param_count()));
  Eigen::Index at = 0;
  for (const Network& b : branches) {
    out.segment(at, b.params().size()) = b.params();
    at += b.params().size();
  }
  out.segment(at, head.params().size()) = head.params();
  return out;
}

void MultiBranchNet::set_flat_params(const Vec& p) {
  if (p.size() != static_cast<Eigen::Index>(param_count()))
    throw Error(ErrorCode::Internal, "flat parameter size mismatch");
  Eigen::Index at = 0;
  for (Network& b : branches) {
    b.params() = p.segment(at, b.params().size());
    at += b.params().size();
  }
  head.params() = p.segment(at, head.params().size());
}

Vec MultiBranchNet::forward(const std::vector<Vec>& inputs) const {
  std::vector<std::vector<Vec>> ba;
  std::vector<Vec> ha;
  return forward(inputs, ba, ha);
}

Vec MultiBranchNet::forward(const std::vector<Vec>& inputs,
                            std::vector<std::vector<Vec>>& branch_acts,
                            std::vector<Vec>& head_acts) const {
  if (inputs.size() != branches.size())
    throw Error(ErrorCode::Internal, "branch input count mismatch");
  branch_acts.assign(branches.size(), {});
  Vec concat(head.input_size());
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    Vec out = branches[i].forward(inputs[i], branch_acts[i]);
    concat.segment(at, out.size()) = out;
    at += out.size();
  }
  return head.forward(concat, head_acts);
}

void MultiBranchNet::backward(
    const std::vector<std::vector<Vec>>& branch_acts,
    const std::vector<Vec>& head_acts, const Vec& grad_out, Vec& grad) const {
  if (grad.size() != static_cast<Eigen::Index>(param_count()))
    throw Error(ErrorCode::Internal, "gradient buffer size mismatch");
  Eigen::Index offset = 0;
  std::vector<Eigen::Index> branch_offsets;
  for (const Network& b : branches) {
    branch_offsets.push_back(offset);
    offset += static_cast<Eigen::Index>(b.param_count());
  }

  Vec head_grad = Vec::Zero(static_cast<Eigen::Index>(head.param_count()));
  Vec concat_grad;
  head.backward(head_acts, grad_out, head_grad, &concat_grad);
  grad.segment(offset, head_grad.size()) += head_grad;

  Eigen::Index at = 0;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    Vec bg = Vec::Zero(static_cast<Eigen::Index>(branches[i].param_count()));
    Vec slice = concat_grad.segment(at, branches[i].output_size());
    branches[i].backward(branch_acts[i], slice, bg);
    grad.segment(branch_offsets[i], bg.size()) += bg;
    at += branches[i].output_size();
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace inferlab::nn
