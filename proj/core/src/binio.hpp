#pragma once

// Internal little-endian binary helpers shared by the container formats.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace ff::detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

inline void put_f32(std::ostream& os, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(os, v);
}

struct LeReader {
    std::ifstream in;
    std::size_t offset = 0;
    std::string path;
    std::string format;

    void open(const std::string& p, const std::string& fmt) {
        path = p;
        format = fmt;
        in.open(p, std::ios::binary);
        if (!in) throw std::runtime_error(format + ": cannot open '" + p + "'");
    }

    void read(char* dst, std::size_t n, const char* what) {
        in.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw std::runtime_error(format + " '" + path + "': truncated while reading " + what +
                                     " at byte offset " + std::to_string(offset));
        offset += n;
    }

    std::uint32_t u32(const char* what) {
        unsigned char b[4];
        read(reinterpret_cast<char*>(b), 4, what);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    }

    float f32(const char* what) {
        const std::uint32_t v = u32(what);
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }

    std::string str(std::size_t n, const char* what) {
        std::string s(n, '\0');
        read(s.data(), n, what);
        return s;
    }
};

}  // namespace ff::detail
