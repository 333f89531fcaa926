#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "tc/clock.hpp"
#include "tc/registry/types.hpp"

namespace tc::registry {

inline constexpr DurationMs kDefaultTtlMs = 30'000;

/// Device metadata store with heartbeat liveness.
///
/// Readers share the lock; writers are serialized. When a store path is
/// configured every mutation is written to disk before the call returns,
/// and a failed write leaves the in-memory state unchanged.
class Registry {
public:
    explicit Registry(const Clock& clock, std::optional<std::filesystem::path> store = std::nullopt);

    Registry(const Registry&) = delete;
    Registry& operator=(const Registry&) = delete;

    /// Upsert by id; last_heartbeat is refreshed to the clock's now.
    std::string register_device(DeviceDescriptor descriptor);

    void heartbeat(const std::string& device_id, Timestamp at);

    /// Returns false when the id was not registered.
    bool remove(const std::string& device_id);

    /// Devices with `capability` (exact match), heartbeat age <= ttl_ms and,
    /// if given, the same zone. Sorted by id.
    std::vector<DeviceDescriptor> query(std::string_view capability, Timestamp now, DurationMs ttl_ms,
                                        const std::optional<std::string>& zone = std::nullopt) const;

    RegistrySnapshot snapshot(Timestamp now) const;

    std::optional<DeviceDescriptor> find(const std::string& device_id) const;
    bool contains(const std::string& device_id) const;
    std::size_t size() const;

    void persist_to(const std::filesystem::path& path) const;

    /// Replaces the current contents with the file's devices.
    void load_from(const std::filesystem::path& path);

private:
    using DeviceMap = std::map<std::string, DeviceDescriptor>;

    void commit(DeviceMap next);

    const Clock& clock_;
    std::optional<std::filesystem::path> store_;
    mutable std::shared_mutex mutex_;
    DeviceMap devices_;
};

/// Serialized persistence document for a device set (sorted by id).
std::string encode_devices(const std::vector<DeviceDescriptor>& devices);

/// Throws Error(IoError, path) on any read/parse/validation problem.
std::vector<DeviceDescriptor> read_devices_file(const std::filesystem::path& path);

}  // namespace tc::registry
