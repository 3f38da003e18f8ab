// Copyright 2026 The partseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "partseg/refiner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "partseg/binary_io.hpp"

namespace partseg {

namespace {

constexpr const char* kRefinerMagic = "PARTSEGREFINE01";

void check_shapes(const ConvRefiner& r, const PotentialMap& scp, const PotentialMap& obj) {
    if (scp.height != obj.height || scp.width != obj.width)
        throw std::invalid_argument("refiner: scp and object maps differ in size");
    if (scp.channels + obj.channels != r.in_channels)
        throw std::invalid_argument("refiner: input channel count mismatch");
    if (obj.channels != r.out_channels)
        throw std::invalid_argument("refiner: output channel count mismatch");
}

// softmax over a contiguous channel slice, written in place
void softmax_inplace(std::span<double> z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

}  // namespace

ConvRefiner::ConvRefiner(int k, int c_in, int c_out)
    : kernel_size(k), in_channels(c_in), out_channels(c_out),
      kernel(static_cast<std::size_t>(k) * k * c_in * c_out, 0.0),
      bias(c_out, 0.0) {
    if (k <= 0 || k % 2 == 0) throw std::invalid_argument("refiner: kernel size must be odd");
    if (c_in <= 0 || c_out <= 0) throw std::invalid_argument("refiner: channel counts must be positive");
}

ConvRefiner ConvRefiner::identity(int scp_channels, int obj_channels, int k) {
    ConvRefiner r(k, scp_channels + obj_channels, obj_channels);
    const int mid = k / 2;
    for (int c = 0; c < obj_channels; ++c)
        r.kernel[r.kernel_index(mid, mid, scp_channels + c, c)] = 1.0;
    return r;
}

std::vector<double> ConvRefiner::forward_raw(const PotentialMap& scp, const PotentialMap& obj) const {
    check_shapes(*this, scp, obj);
    const int h = scp.height, w = scp.width;
    const int half = kernel_size / 2;
    const int c_scp = scp.channels;
    std::vector<double> z(static_cast<std::size_t>(h) * w * out_channels, 0.0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double* zp = &z[(static_cast<std::size_t>(r) * w + c) * out_channels];
            for (int co = 0; co < out_channels; ++co) zp[co] = bias[co];
            for (int ky = 0; ky < kernel_size; ++ky) {
                const int rr = r + ky - half;
                if (rr < 0 || rr >= h) continue;
                for (int kx = 0; kx < kernel_size; ++kx) {
                    const int cc = c + kx - half;
                    if (cc < 0 || cc >= w) continue;
                    const double* kp = &kernel[kernel_index(ky, kx, 0, 0)];
                    for (int ci = 0; ci < in_channels; ++ci) {
                        const double x = ci < c_scp ? scp.at(rr, cc, ci) : obj.at(rr, cc, ci - c_scp);
                        if (x == 0.0) { kp += out_channels; continue; }
                        for (int co = 0; co < out_channels; ++co) zp[co] += kp[co] * x;
                        kp += out_channels;
                    }
                }
            }
        }
    }
    return z;
}

PotentialMap ConvRefiner::forward(const PotentialMap& scp, const PotentialMap& obj) const {
    std::vector<double> z = forward_raw(scp, obj);
    PotentialMap out(scp.height, scp.width, out_channels);
    const std::size_t pixels = static_cast<std::size_t>(scp.height) * scp.width;
    for (std::size_t p = 0; p < pixels; ++p) {
        std::span<double> slice(&z[p * out_channels], out_channels);
        softmax_inplace(slice);
        for (int co = 0; co < out_channels; ++co)
            out.values[p * out_channels + co] = static_cast<float>(slice[co]);
    }
    return out;
}

PotentialMap refine_object_potentials(const PotentialMap& scp, const PotentialMap& obj,
                                      const ConvRefiner& refiner) {
    return refiner.forward(scp, obj);
}

void save_refiner(const ConvRefiner& r, const std::string& path) {
    auto out = io::open_out(path);
    io::write_magic(out, kRefinerMagic);
    io::write_u32(out, static_cast<std::uint32_t>(r.kernel_size));
    io::write_u32(out, static_cast<std::uint32_t>(r.in_channels));
    io::write_u32(out, static_cast<std::uint32_t>(r.out_channels));
    for (double v : r.kernel) io::write_f32(out, static_cast<float>(v));
    for (double v : r.bias) io::write_f32(out, static_cast<float>(v));
    if (!out) throw std::runtime_error("refiner: write failed for '" + path + "'");
}

ConvRefiner load_refiner(const std::string& path) {
    auto in = io::open_in(path);
    io::check_magic(in, kRefinerMagic, "refiner");
    const int k = static_cast<int>(io::read_u32(in));
    const int c_in = static_cast<int>(io::read_u32(in));
    const int c_out = static_cast<int>(io::read_u32(in));
    ConvRefiner r(k, c_in, c_out);
    for (double& v : r.kernel) v = io::read_f32(in);
    for (double& v : r.bias) v = io::read_f32(in);
    for (double v : r.kernel)
        if (!std::isfinite(v)) throw std::runtime_error("refiner: non-finite kernel weight in file");
    for (double v : r.bias)
        if (!std::isfinite(v)) throw std::runtime_error("refiner: non-finite bias in file");
    return r;
}

double refiner_loss_and_grad(const ConvRefiner& r, std::span<const RefinerSample> samples,
                             std::vector<double>* kernel_grad, std::vector<double>* bias_grad) {
    if (samples.empty()) throw std::runtime_error("refiner: empty sample set");
    if (kernel_grad) kernel_grad->assign(r.kernel.size(), 0.0);
    if (bias_grad) bias_grad->assign(r.bias.size(), 0.0);

    std::size_t total_pixels = 0;
    for (const auto& s : samples)
        total_pixels += static_cast<std::size_t>(s.gt_object.height) * s.gt_object.width;

    const int half = r.kernel_size / 2;
    double loss = 0.0;
    for (const auto& s : samples) {
        if (s.gt_object.height != s.scp.height || s.gt_object.width != s.scp.width)
            throw std::runtime_error("refiner: ground-truth map size mismatch");
        std::vector<double> z = r.forward_raw(s.scp, s.obj);
        const int h = s.scp.height, w = s.scp.width;
        const int c_scp = s.scp.channels;
        for (int row = 0; row < h; ++row) {
            for (int col = 0; col < w; ++col) {
                const std::size_t p = static_cast<std::size_t>(row) * w + col;
                std::span<double> prob(&z[p * r.out_channels], r.out_channels);
                softmax_inplace(prob);
                const std::uint32_t gt = s.gt_object.at(row, col);
                if (gt >= static_cast<std::uint32_t>(r.out_channels))
                    throw std::runtime_error("refiner: ground-truth label out of range");
                loss += -std::log(std::max(prob[gt], 1e-12));
                if (!kernel_grad && !bias_grad) continue;
                // delta = (softmax - onehot) / total_pixels
                for (int co = 0; co < r.out_channels; ++co) {
                    const double delta =
                        (prob[co] - (static_cast<std::uint32_t>(co) == gt ? 1.0 : 0.0)) /
                        static_cast<double>(total_pixels);
                    if (bias_grad) (*bias_grad)[co] += delta;
                    if (!kernel_grad) continue;
                    for (int ky = 0; ky < r.kernel_size; ++ky) {
                        const int rr = row + ky - half;
                        if (rr < 0 || rr >= h) continue;
                        for (int kx = 0; kx < r.kernel_size; ++kx) {
                            const int cc = col + kx - half;
                            if (cc < 0 || cc >= w) continue;
                            for (int ci = 0; ci < r.in_channels; ++ci) {
                                const double x = ci < c_scp ? s.scp.at(rr, cc, ci)
                                                            : s.obj.at(rr, cc, ci - c_scp);
                                if (x != 0.0)
                                    (*kernel_grad)[r.kernel_index(ky, kx, ci, co)] += delta * x;
                            }
                        }
                    }
                }
            }
        }
    }
    return loss / static_cast<double>(total_pixels);
}

ConvRefiner train_refiner(const std::vector<RefinerSample>& samples, const TrainConfig& cfg,
                          std::vector<double>* loss_log) {
    if (samples.empty()) throw std::runtime_error("refiner: empty sample set");
    if (cfg.learning_rate <= 0.0) throw std::runtime_error("refiner: learning rate must be positive");
    if (cfg.batch_size < 1) throw std::runtime_error("refiner: batch size must be >= 1");

    const int c_scp = samples.front().scp.channels;
    const int c_obj = samples.front().obj.channels;
    ConvRefiner r(5, c_scp + c_obj, c_obj);

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> kgrad, bgrad;
    const bool full_batch = cfg.batch_size >= static_cast<int>(samples.size());

    if (loss_log) {
        loss_log->clear();
        loss_log->push_back(refiner_loss_and_grad(r, samples));
    }
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        if (full_batch) {
            const double loss = refiner_loss_and_grad(r, samples, &kgrad, &bgrad);
            if (std::isnan(loss))
                throw std::runtime_error("refiner: loss diverged to NaN at epoch " + std::to_string(epoch));
            for (std::size_t i = 0; i < r.kernel.size(); ++i) r.kernel[i] -= cfg.learning_rate * kgrad[i];
            for (std::size_t i = 0; i < r.bias.size(); ++i) r.bias[i] -= cfg.learning_rate * bgrad[i];
        } else {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
                std::vector<RefinerSample> batch;
                batch.reserve(stop - start);
                for (std::size_t i = start; i < stop; ++i) batch.push_back(samples[order[i]]);
                const double loss = refiner_loss_and_grad(r, batch, &kgrad, &bgrad);
                if (std::isnan(loss))
                    throw std::runtime_error("refiner: loss diverged to NaN at epoch " +
                                             std::to_string(epoch));
                for (std::size_t i = 0; i < r.kernel.size(); ++i) r.kernel[i] -= cfg.learning_rate * kgrad[i];
                for (std::size_t i = 0; i < r.bias.size(); ++i) r.bias[i] -= cfg.learning_rate * bgrad[i];
            }
        }
        if (loss_log) loss_log->push_back(refiner_loss_and_grad(r, samples));
    }
    return r;
}

}  // namespace partseg
