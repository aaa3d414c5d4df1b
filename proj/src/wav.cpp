#include "respir/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace respir {

namespace {

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    out.write(reinterpret_cast<char*>(b), 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF)};
    out.write(reinterpret_cast<char*>(b), 2);
}

}  // namespace

Signal read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw WavError(WavError::Code::MissingFile,
                       "cannot open WAV file: " + path.string());
    }

    char tag[4];
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "RIFF", 4) != 0) {
        throw WavError(WavError::Code::CorruptHeader,
                       "not a RIFF file: " + path.string());
    }
    read_u32(in);  // RIFF payload size, not trusted
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "WAVE", 4) != 0) {
        throw WavError(WavError::Code::CorruptHeader,
                       "missing WAVE tag: " + path.string());
    }

    bool have_fmt = false;
    std::uint16_t channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::vector<double> samples;

    while (in.read(tag, 4)) {
        std::uint32_t size = read_u32(in);
        if (!in) {
            throw WavError(WavError::Code::CorruptHeader,
                           "truncated chunk header: " + path.string());
        }
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (size < 16) {
                throw WavError(WavError::Code::CorruptHeader,
                               "fmt chunk too small: " + path.string());
            }
            std::uint16_t format = read_u16(in);
            channels = read_u16(in);
            rate = read_u32(in);
            read_u32(in);  // byte rate
            read_u16(in);  // block align
            bits = read_u16(in);
            if (size > 16) in.seekg(size - 16, std::ios::cur);
            if (format != 1) {
                throw WavError(WavError::Code::UnsupportedFormat,
                               "unsupported WAV format code " + std::to_string(format) +
                                   " (PCM only): " + path.string());
            }
            if (channels != 1) {
                throw WavError(WavError::Code::UnsupportedChannelCount,
                               "unsupported channel count " + std::to_string(channels) +
                                   " (mono only): " + path.string());
            }
            if (bits != 16) {
                throw WavError(WavError::Code::UnsupportedBitDepth,
                               "unsupported bit depth " + std::to_string(bits) +
                                   " (16-bit only): " + path.string());
            }
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) {
                throw WavError(WavError::Code::CorruptHeader,
                               "data chunk before fmt chunk: " + path.string());
            }
            std::size_t n = size / 2;
            std::vector<std::int16_t> pcm(n);
            in.read(reinterpret_cast<char*>(pcm.data()),
                    static_cast<std::streamsize>(n * 2));
            if (static_cast<std::size_t>(in.gcount()) != n * 2) {
                throw WavError(WavError::Code::CorruptHeader,
                               "data chunk truncated: " + path.string());
            }
            samples.resize(n);
            for (std::size_t i = 0; i < n; ++i) samples[i] = pcm[i] / 32768.0;

            Signal signal;
            signal.samples = std::move(samples);
            signal.sample_rate_hz = static_cast<int>(rate);
            if (signal.sample_rate_hz < 2000) {
                throw WavError(WavError::Code::UnsupportedSampleRate,
                               "sample rate " + std::to_string(rate) +
                                   " Hz below the 2000 Hz minimum: " + path.string());
            }
            if (signal.samples.empty()) {
                throw WavError(WavError::Code::CorruptHeader,
                               "empty data chunk: " + path.string());
            }
            return signal;
        } else {
            // skip unknown chunk (word aligned)
            in.seekg(size + (size & 1), std::ios::cur);
        }
    }
    throw WavError(WavError::Code::CorruptHeader,
                   "no data chunk found: " + path.string());
}

void write_wav(const std::filesystem::path& path, const Signal& signal) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw WavError(WavError::Code::IoFailure,
                       "cannot create WAV file: " + path.string());
    }
    const auto n = static_cast<std::uint32_t>(signal.samples.size());
    const std::uint32_t data_bytes = n * 2;
    const std::uint32_t rate = static_cast<std::uint32_t>(signal.sample_rate_hz);

    out.write("RIFF", 4);
    write_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 16);
    write_u16(out, 1);   // PCM
    write_u16(out, 1);   // mono
    write_u32(out, rate);
    write_u32(out, rate * 2);  // byte rate
    write_u16(out, 2);   // block align
    write_u16(out, 16);  // bits per sample
    out.write("data", 4);
    write_u32(out, data_bytes);

    std::vector<std::int16_t> pcm(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        double q = std::round(signal.samples[i] * 32768.0);
        if (q > 32767.0) q = 32767.0;
        if (q < -32768.0) q = -32768.0;
        pcm[i] = static_cast<std::int16_t>(q);
    }
    out.write(reinterpret_cast<const char*>(pcm.data()),
              static_cast<std::streamsize>(data_bytes));
    if (!out) {
        throw WavError(WavError::Code::IoFailure,
                       "short write: " + path.string());
    }
}

}  // namespace respir
