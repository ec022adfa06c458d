#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "idskit/error.hpp"
#include "idskit/matrix.hpp"

namespace idskit {

class Model;
using ModelPtr = std::shared_ptr<const Model>;

/// Little-endian binary sink for the versioned model format.
class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}

    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void i64(std::int64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    void f64_vec(std::span<const double> v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(double));
    }
    void i32_vec(std::span<const int> v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(int));
    }
    void matrix(const Matrix& m) {
        u64(m.rows());
        u64(m.cols());
        raw(m.data().data(), m.data().size() * sizeof(double));
    }

private:
    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw IoError("model write failed");
    }
    std::ostream& out_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& in) : in_(in) {}

    std::uint8_t u8() {
        std::uint8_t v;
        raw(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, sizeof v);
        return v;
    }
    std::int64_t i64() {
        std::int64_t v;
        raw(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        raw(&v, sizeof v);
        return v;
    }
    std::string str() {
        std::string s(u64(), '\0');
        raw(s.data(), s.size());
        return s;
    }
    std::vector<double> f64_vec() {
        std::vector<double> v(u64());
        raw(v.data(), v.size() * sizeof(double));
        return v;
    }
    std::vector<int> i32_vec() {
        std::vector<int> v(u64());
        raw(v.data(), v.size() * sizeof(int));
        return v;
    }
    Matrix matrix() {
        const std::uint64_t r = u64(), c = u64();
        Matrix m(r, c);
        raw(m.data().data(), m.data().size() * sizeof(double));
        return m;
    }

private:
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!in_) throw IoError("model read failed (truncated or corrupt)");
    }
    std::istream& in_;
};

void save_model(const Model& model, const std::string& path);
ModelPtr load_model(const std::string& path);

void write_model(const Model& model, BinaryWriter& w);
ModelPtr read_model(BinaryReader& r);

}  // namespace idskit
