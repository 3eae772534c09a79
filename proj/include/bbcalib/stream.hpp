#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <chrono>
#include <cstring>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>

#include "geometry.hpp"

namespace bbcalib {

/// Timestamped rigid pose of a tracked marker body.
struct TrackedPose {
    std::uint32_t marker_id = 0;
    std::uint64_t timestamp_us = 0;
    RigidTransform pose;
};

constexpr std::size_t kPacketSize = 48;
constexpr char kPacketMagic[4] = {'T', 'R', 'K', 'P'};

namespace detail {

inline void put_u32(std::uint8_t* b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        b[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline void put_u64(std::uint8_t* b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline void put_f32(std::uint8_t* b, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(b, bits);
}

inline std::uint32_t get_u32(const std::uint8_t* b) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(const std::uint8_t* b) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline float get_f32(const std::uint8_t* b) {
    const std::uint32_t bits = get_u32(b);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

} // namespace detail

/// Wire layout, little-endian, 48 bytes:
///   "TRKP" | u32 marker_id | u64 timestamp_us | f32 w,x,y,z,tx,ty,tz | 4 pad
/// Translation in mm; float32 on the wire, float64 internally.
inline std::array<std::uint8_t, kPacketSize> encode_packet(const TrackedPose& p) {
    std::array<std::uint8_t, kPacketSize> b{};
    std::memcpy(b.data(), kPacketMagic, 4);
    detail::put_u32(b.data() + 4, p.marker_id);
    detail::put_u64(b.data() + 8, p.timestamp_us);
    const UnitQuaternion& q = p.pose.rotation;
    const float vals[7] = {
        static_cast<float>(q.w()), static_cast<float>(q.x()),
        static_cast<float>(q.y()), static_cast<float>(q.z()),
        static_cast<float>(p.pose.translation.x()),
        static_cast<float>(p.pose.translation.y()),
        static_cast<float>(p.pose.translation.z())};
    for (int i = 0; i < 7; ++i)
        detail::put_f32(b.data() + 16 + 4 * i, vals[i]);
    return b;
}

inline TrackedPose decode_packet(const std::uint8_t* data, std::size_t size) {
    if (size != kPacketSize)
        throw BadLength("decode_packet: expected 48 bytes");
    if (std::memcmp(data, kPacketMagic, 4) != 0)
        throw BadMagic("decode_packet: bad magic");
    TrackedPose p;
    p.marker_id = detail::get_u32(data + 4);
    p.timestamp_us = detail::get_u64(data + 8);
    double v[7];
    for (int i = 0; i < 7; ++i)
        v[i] = detail::get_f32(data + 16 + 4 * i);
    const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
    if (norm < 1.0 - 1e-3 || norm > 1.0 + 1e-3)
        throw NonUnitQuaternion("decode_packet: quaternion norm out of tolerance");
    p.pose.rotation = UnitQuaternion(v[0], v[1], v[2], v[3]);
    p.pose.translation = Point3(v[4], v[5], v[6]);
    return p;
}

inline TrackedPose decode_packet(const std::vector<std::uint8_t>& b) {
    return decode_packet(b.data(), b.size());
}

/// Latest-value store: one slot per marker, timestamps monotone per marker,
/// stale packets dropped and counted. One writer, any number of readers.
class PoseStore {
public:
    /// Returns true when the pose was accepted (newer than the stored one).
    bool accept(const TrackedPose& p) {
        const auto now = std::chrono::steady_clock::now();
        std::lock_guard lock(mutex_);
        auto it = slots_.find(p.marker_id);
        if (it != slots_.end() && p.timestamp_us <= it->second.pose.timestamp_us) {
            ++dropped_;
            return false;
        }
        slots_[p.marker_id] = Slot{p, now};
        ++accepted_;
        return true;
    }

    std::optional<std::pair<TrackedPose, std::uint64_t>> latest(std::uint32_t marker_id) const {
        std::lock_guard lock(mutex_);
        auto it = slots_.find(marker_id);
        if (it == slots_.end())
            return std::nullopt;
        const auto age = std::chrono::duration_cast<std::chrono::microseconds>(
                             std::chrono::steady_clock::now() - it->second.received)
                             .count();
        return std::make_pair(it->second.pose, static_cast<std::uint64_t>(age));
    }

    std::uint64_t accepted_count() const { return accepted_; }
    std::uint64_t dropped_count() const { return dropped_; }

private:
    struct Slot {
        TrackedPose pose;
        std::chrono::steady_clock::time_point received;
    };
    mutable std::mutex mutex_;
    std::unordered_map<std::uint32_t, Slot> slots_;
    std::atomic<std::uint64_t> accepted_{0};
    std::atomic<std::uint64_t> dropped_{0};
};

/// Feeds a file of concatenated 48-byte records through the same accept path
/// as the live listener. Returns the number of well-formed packets read;
/// malformed records are counted separately.
inline std::size_t replay_file(const std::string& path, PoseStore& store,
                               std::size_t* malformed = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("replay_file: cannot open " + path);
    std::size_t count = 0, bad = 0;
    std::uint8_t buf[kPacketSize];
    while (in.read(reinterpret_cast<char*>(buf), kPacketSize)) {
        try {
            store.accept(decode_packet(buf, kPacketSize));
            ++count;
        } catch (const Error&) {
            ++bad;
        }
    }
    if (malformed)
        *malformed = bad;
    return count;
}

/// UDP listener: binds the port and writes every well-formed packet into a
/// PoseStore from a background thread.
class UdpListener {
public:
    UdpListener(PoseStore& store, std::uint16_t port = 14514) : store_(store) {
        fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
        if (fd_ < 0)
            throw Error("UdpListener: socket() failed");
        int opt = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &opt, sizeof(opt));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        addr.sin_port = htons(port);
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            ::close(fd_);
            throw Error("UdpListener: cannot bind port " + std::to_string(port));
        }
        timeval tv{0, 100000}; // 100 ms poll so stop() is responsive
        ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        thread_ = std::thread([this] { run(); });
    }

    ~UdpListener() { stop(); }

    void stop() {
        if (running_.exchange(false) && thread_.joinable())
            thread_.join();
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    std::uint64_t malformed_count() const { return malformed_; }

private:
    void run() {
        std::uint8_t buf[256];
        while (running_) {
            const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
            if (n < 0)
                continue; // timeout or interrupt
            try {
                store_.accept(decode_packet(buf, static_cast<std::size_t>(n)));
            } catch (const Error&) {
                ++malformed_;
            }
        }
    }

    PoseStore& store_;
    int fd_ = -1;
    std::atomic<bool> running_{true};
    std::atomic<std::uint64_t> malformed_{0};
    std::thread thread_;
};

/// Loopback/remote sender for tests and replay tools.
class UdpSender {
public:
    explicit UdpSender(std::uint16_t port, const std::string& host = "127.0.0.1") {
        fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
        if (fd_ < 0)
            throw Error("UdpSender: socket() failed");
        addr_.sin_family = AF_INET;
        addr_.sin_port = htons(port);
        if (::inet_pton(AF_INET, host.c_str(), &addr_.sin_addr) != 1) {
            ::close(fd_);
            throw Error("UdpSender: bad host " + host);
        }
    }

    ~UdpSender() {
        if (fd_ >= 0)
            ::close(fd_);
    }

    void send(const TrackedPose& p) {
        const auto b = encode_packet(p);
        ::sendto(fd_, b.data(), b.size(), 0, reinterpret_cast<const sockaddr*>(&addr_),
                 sizeof(addr_));
    }

private:
    int fd_ = -1;
    sockaddr_in addr_{};
};

} // namespace bbcalib
