#pragma once

// Deterministic synthetic image corpus and a small binary tensor-file
// container. Every function here is a pure function of (config, seed).

#include <cstdint>
#include <string>
#include <vector>

#include "srmoe/mat.hpp"

namespace srmoe {

struct DataConfig {
    int classes = 4;
    int per_class = 400;
    int channels = 1;
    int height = 16;
    int width = 16;
    double noise = 0.5;          // Gaussian pixel noise std
    bool contrast_flip = false;  // random per-sample contrast inversion;
                                 // defeats linear pixel classifiers so that
                                 // nonlinear features carry the task
    int novel_per_class = 25;
    double train_ratio = 0.70;
    double val_ratio = 0.15;
    double test_ratio = 0.15;

    void validate() const;  // throws std::invalid_argument
};

struct Dataset {
    int classes = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    Mat images;              // [N x channels*height*width]
    std::vector<int> labels; // length N, values in [0, classes)

    int size() const { return images.rows; }
    int feature_dim() const { return channels * height * width; }
    bool empty_set() const { return images.rows == 0; }
};

// Each class draws from a distinct structured template (oriented gradient,
// blob, rings, stripes; families cycle and reparameterize beyond four
// classes) plus seeded Gaussian pixel noise. Samples are ordered class by
// class.
Dataset generate_synthetic(const DataConfig& cfg, std::uint64_t seed);

// The noiseless template image for one class (for tests and inspection).
Mat class_template(const DataConfig& cfg, int cls);

struct Splits {
    Dataset train, val, test, novel;
};

// Stratified split. Per class, novel_per_class samples are carved out
// first, then the remainder splits by the the train/val/test ratios
// (floor for train and val, remainder to test). Shuffling is seeded per
// class; ratios must sum to 1.
Splits split(const Dataset& all, double train_ratio, double val_ratio, double test_ratio,
             int novel_per_class, std::uint64_t seed);

// Binary container: magic "SRTD", little-endian header (version, classes,
// channels, height, width, sample count) then raw f64 image rows followed
// by i32 labels. Save -> load round trips bit-exactly.
void save_tensor_file(const Dataset& ds, const std::string& path);
Dataset load_tensor_file(const std::string& path);

}  // namespace srmoe
