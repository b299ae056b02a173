#pragma once

// Objectness seeker: a 13x13 depthwise block (BN + ReLU) followed by a 1x1
// convolution to one channel and a sigmoid. Trained against soft pseudo-labels
// with focal + dice loss weighted 20:1.

#include "esod/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

namespace esod {

inline constexpr int kSeekerKernel = 13;
inline constexpr double kFocalWeight = 20.0;
inline constexpr double kDiceWeight = 1.0;

struct SeekerParams {
    int channels = 1;
    std::vector<double> dw_weights;  // [channel][13][13]
    std::vector<double> dw_bias;
    BatchNorm bn;
    ConvSpec pw;  // 1x1, channels -> 1

    static SeekerParams zeros(int channels);
    /// He-style random initialisation; BN starts as identity (eps 1e-5).
    static SeekerParams random(int channels, std::mt19937_64& rng);

    void validate() const;
    friend bool operator==(const SeekerParams&, const SeekerParams&) = default;
};

struct ObjectnessMask {
    Grid2D grid;
};

/// Pre-sigmoid seeker output, same spatial shape as the features.
Grid2D seek_logits(const FeatureStack& features, const SeekerParams& params);
ObjectnessMask seek(const FeatureStack& features, const SeekerParams& params);

/// A scalar loss together with its gradient (w.r.t. logits or probabilities,
/// depending on the function).
struct LossValue {
    double value = 0.0;
    Grid2D grad;
};

struct FocalParams {
    double gamma = 2.0;
    double alpha = 0.25;

    void validate() const;
};

/// Probabilities are clipped to [kProbabilityClip, 1 - kProbabilityClip]
/// before entering any logarithm.
inline constexpr double kProbabilityClip = 1e-7;

/// Mean over cells of the soft-target binary focal term
///   -a*y*(1-p)^g*log(p) - (1-a)*(1-y)*p^g*log(1-p),  p = sigmoid(z).
/// Gradient is with respect to the logits z.
LossValue focal_loss(const Grid2D& logits, const Grid2D& target, const FocalParams& params = {});

/// Same loss for callers that hold probabilities. The gradient is with respect
/// to the logit of the clipped probability.
LossValue focal_loss_from_probabilities(const Grid2D& probabilities, const Grid2D& target,
                                        const FocalParams& params = {});

/// 1 - (2*sum(p*y) + smooth) / (sum(p) + sum(y) + smooth); gradient w.r.t. p.
LossValue dice_loss(const Grid2D& pred, const Grid2D& target, double smooth = 1.0);

/// Dice on sigmoid(logits); gradient w.r.t. the logits.
LossValue dice_loss_logits(const Grid2D& logits, const Grid2D& target, double smooth = 1.0);

struct LossReport {
    double focal = 0.0;
    double dice = 0.0;
    double total = 0.0;
    Grid2D grad;  // d total / d logit
};

LossReport seeker_loss(const Grid2D& logits, const Grid2D& target);

/// Parameter gradients, laid out like SeekerParams. BN running statistics are
/// frozen; only gamma and beta receive gradients.
struct SeekerGradients {
    std::vector<double> dw_weights;
    std::vector<double> dw_bias;
    std::vector<double> bn_gamma;
    std::vector<double> bn_beta;
    std::vector<double> pw_weights;
    std::vector<double> pw_bias;
};

SeekerGradients seeker_backward(const FeatureStack& features, const SeekerParams& params,
                                const Grid2D& grad_logits);

struct TrainOptions {
    int steps = 200;
    double learning_rate = 0.01;
};

/// Full-batch Adam over the seeker parameters with the stem frozen. Returns
/// the total loss before each step plus the loss after the last one.
std::vector<double> train_seeker(SeekerParams& params, std::span<const FeatureStack> features,
                                 std::span<const Grid2D> targets, const TrainOptions& options = {});

/// Flat little-endian file: "ESODSKR1", u32 channels, u32 kernel, then f64
/// arrays dw_weights, dw_bias, bn mean/var/gamma/beta, bn eps, pw weights, pw bias.
std::string encode_seeker_params(const SeekerParams& params);
SeekerParams decode_seeker_params(const std::string& bytes);
void save_seeker_params(const SeekerParams& params, const std::filesystem::path& path);
SeekerParams load_seeker_params(const std::filesystem::path& path);

}  // namespace esod
