#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "gumdrop/common.hpp"

namespace gumdrop {

// Little-endian binary container primitives for model files. Layout is fixed
// so that identical parameters always produce identical bytes.
class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& os) : os_(os) {}

    void u8(uint8_t v) { os_.put(static_cast<char>(v)); }
    void u32(uint32_t v) {
        char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
        os_.write(b, 4);
    }
    void u64(uint64_t v) {
        char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
        os_.write(b, 8);
    }
    void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        os_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void vec_f64(const std::vector<double>& v) {
        u64(v.size());
        for (double d : v) f64(d);
    }
    void vec_i32(const std::vector<int>& v) {
        u64(v.size());
        for (int d : v) i32(d);
    }
    void vec_str(const std::vector<std::string>& v) {
        u64(v.size());
        for (const auto& s : v) str(s);
    }

private:
    std::ostream& os_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& is) : is_(is) {}

    uint8_t u8() {
        int c = is_.get();
        if (c == EOF) fail();
        return static_cast<uint8_t>(c);
    }
    uint32_t u32() {
        char b[4];
        if (!is_.read(b, 4)) fail();
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
        return v;
    }
    uint64_t u64() {
        char b[8];
        if (!is_.read(b, 8)) fail();
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
        return v;
    }
    int32_t i32() { return static_cast<int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        uint64_t n = u64();
        if (n > (1ull << 32)) fail();
        std::string s(n, '\0');
        if (n && !is_.read(s.data(), static_cast<std::streamsize>(n))) fail();
        return s;
    }
    std::vector<double> vec_f64() {
        uint64_t n = u64();
        std::vector<double> v(n);
        for (auto& d : v) d = f64();
        return v;
    }
    std::vector<int> vec_i32() {
        uint64_t n = u64();
        std::vector<int> v(n);
        for (auto& d : v) d = i32();
        return v;
    }
    std::vector<std::string> vec_str() {
        uint64_t n = u64();
        std::vector<std::string> v(n);
        for (auto& s : v) s = str();
        return v;
    }

private:
    [[noreturn]] void fail() { throw ModelIoError("truncated or corrupt model data"); }
    std::istream& is_;
};

}  // namespace gumdrop
