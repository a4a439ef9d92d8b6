#pragma once

#include <cstdint>

#include "crossrsa/features.hpp"
#include "crossrsa/learnrules.hpp"

namespace crossrsa {

/// Labelled synthetic images for tests and demos: class k is a sinusoidal
/// grating at orientation pi * k / n_classes with a class tint, a random phase
/// and pixel noise. Image i draws from Rng(seed, i).
ImageDataset make_toy_images(std::size_t n, std::size_t size, std::size_t n_classes, std::uint64_t seed,
                             double noise = 0.1);

/// Smooth random stimuli (sums of a few random gratings and blobs) with IDs
/// "stim<i>", standing in for a real stimulus set.
StimulusSet make_toy_stimuli(std::size_t n, std::size_t size, std::uint64_t seed);

}  // namespace crossrsa
