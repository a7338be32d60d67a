#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace eegrl {

// Dense row-major tensor of doubles, order <= 4.
// Feature maps use [channels, height, width] layout.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;

    explicit Tensor(std::vector<int> s, double fill = 0.0)
        : shape(std::move(s)), data(static_cast<size_t>(count(shape)), fill) {}

    static Tensor from(std::vector<int> s, std::vector<double> d) {
        Tensor t;
        if (count(s) != static_cast<int64_t>(d.size()))
            throw std::invalid_argument("Tensor::from: element count does not match shape");
        t.shape = std::move(s);
        t.data = std::move(d);
        return t;
    }

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int e : s) {
            if (e <= 0) throw std::invalid_argument("Tensor: nonpositive extent");
            n *= e;
        }
        return n;
    }

    int64_t size() const { return static_cast<int64_t>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape.at(static_cast<size_t>(i)); }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }

    double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    // [c,h,w] indexing for 3-d maps
    double& at3(int c, int h, int w) {
        return data[(static_cast<size_t>(c) * shape[1] + h) * shape[2] + w];
    }
    double at3(int c, int h, int w) const {
        return data[(static_cast<size_t>(c) * shape[1] + h) * shape[2] + w];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

}  // namespace eegrl
