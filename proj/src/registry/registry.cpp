#include "tc/registry/registry.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "tc/error.hpp"
#include "tc/names.hpp"
#include "tc/registry/json.hpp"

namespace tc::registry {

namespace {

void write_file_atomically(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, path.string(), std::strerror(errno));
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, path.string(), "write failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, path.string(), ec.message());
}

}  // namespace

std::string encode_devices(const std::vector<DeviceDescriptor>& devices) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : devices) arr.push_back(to_json(d));
    return nlohmann::json{{"devices", std::move(arr)}}.dump(2) + "\n";
}

std::vector<DeviceDescriptor> read_devices_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, path.string(), std::strerror(errno));
    std::stringstream buf;
    buf << in.rdbuf();

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoError, path.string(), e.what());
    }
    if (!doc.is_object() || !doc.contains("devices") || !doc["devices"].is_array())
        throw Error(ErrorCode::IoError, path.string(), "expected {\"devices\":[...]}");

    std::vector<DeviceDescriptor> out;
    for (const auto& item : doc["devices"]) {
        try {
            auto d = descriptor_from_json(item);
            validate(d);
            out.push_back(std::move(d));
        } catch (const Error& e) {
            throw Error(ErrorCode::IoError, path.string(), e.what());
        }
    }
    return out;
}

Registry::Registry(const Clock& clock, std::optional<std::filesystem::path> store)
    : clock_(clock), store_(std::move(store)) {}

void Registry::commit(DeviceMap next) {
    if (store_) {
        std::vector<DeviceDescriptor> list;
        list.reserve(next.size());
        for (const auto& [_, d] : next) list.push_back(d);
        write_file_atomically(*store_, encode_devices(list));
    }
    devices_ = std::move(next);
}

std::string Registry::register_device(DeviceDescriptor descriptor) {
    validate(descriptor);
    descriptor.last_heartbeat = clock_.now();
    std::unique_lock lock(mutex_);
    auto next = devices_;
    auto id = descriptor.id;
    next[id] = std::move(descriptor);
    commit(std::move(next));
    return id;
}

void Registry::heartbeat(const std::string& device_id, Timestamp at) {
    std::unique_lock lock(mutex_);
    auto it = devices_.find(device_id);
    if (it == devices_.end()) throw Error(ErrorCode::UnknownDevice, device_id);
    if (at < it->second.last_heartbeat)
        throw Error(ErrorCode::StaleTimestamp, device_id,
                    std::to_string(at) + " < " + std::to_string(it->second.last_heartbeat));
    if (!store_) {
        it->second.last_heartbeat = at;
        return;
    }
    auto next = devices_;
    next[device_id].last_heartbeat = at;
    commit(std::move(next));
}

bool Registry::remove(const std::string& device_id) {
    std::unique_lock lock(mutex_);
    if (!devices_.contains(device_id)) return false;
    auto next = devices_;
    next.erase(device_id);
    commit(std::move(next));
    return true;
}

std::vector<DeviceDescriptor> Registry::query(std::string_view capability, Timestamp now, DurationMs ttl_ms,
                                              const std::optional<std::string>& zone) const {
    std::vector<DeviceDescriptor> out;
    if (!is_capability_name(capability)) return out;
    const std::string cap(capability);
    std::shared_lock lock(mutex_);
    for (const auto& [id, d] : devices_) {
        if (!d.capabilities.contains(cap)) continue;
        if (now - d.last_heartbeat > ttl_ms) continue;
        if (zone && d.location.zone != *zone) continue;
        out.push_back(d);
    }
    return out;
}

RegistrySnapshot Registry::snapshot(Timestamp now) const {
    RegistrySnapshot snap;
    snap.taken_at = now;
    std::shared_lock lock(mutex_);
    snap.devices.reserve(devices_.size());
    for (const auto& [_, d] : devices_) snap.devices.push_back(d);
    return snap;
}

std::optional<DeviceDescriptor> Registry::find(const std::string& device_id) const {
    std::shared_lock lock(mutex_);
    auto it = devices_.find(device_id);
    if (it == devices_.end()) return std::nullopt;
    return it->second;
}

bool Registry::contains(const std::string& device_id) const {
    std::shared_lock lock(mutex_);
    return devices_.contains(device_id);
}

std::size_t Registry::size() const {
    std::shared_lock lock(mutex_);
    return devices_.size();
}

void Registry::persist_to(const std::filesystem::path& path) const {
    std::vector<DeviceDescriptor> list;
    {
        std::shared_lock lock(mutex_);
        for (const auto& [_, d] : devices_) list.push_back(d);
    }
    write_file_atomically(path, encode_devices(list));
}

void Registry::load_from(const std::filesystem::path& path) {
    auto list = read_devices_file(path);
    DeviceMap next;
    for (auto& d : list) {
        auto id = d.id;
        if (!next.emplace(id, std::move(d)).second)
            throw Error(ErrorCode::IoError, path.string(), "duplicate device id '" + id + "'");
    }
    std::unique_lock lock(mutex_);
    commit(std::move(next));
}

}  // namespace tc::registry
