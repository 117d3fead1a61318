#include "elastica/checkpoint.hpp"

#include <random>

#include "elastica/errors.hpp"

namespace elastica::ad {

namespace {

std::pair<std::string, std::string> split_name(const std::string& name) {
    const auto slash = name.find('/');
    if (slash == std::string::npos) return {"root", name};
    return {name.substr(0, slash), name.substr(slash + 1)};
}

void check_version(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("version") || !j.contains("modules")) {
        throw DataError("checkpoint: missing version or modules");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
        throw DataError("checkpoint: unsupported version " + j.at("version").dump());
    }
}

template <typename Fn>
void for_each_stored(const nlohmann::json& j, Fn fn) {
    for (const auto& [module, params] : j.at("modules").items()) {
        for (const auto& [pname, entry] : params.items()) {
            const std::string full = module == "root" ? pname : module + "/" + pname;
            fn(full, entry.at("shape").template get<Shape>(), entry.at("data").template get<std::vector<double>>());
        }
    }
}

}  // namespace

nlohmann::json checkpoint_to_json(const ParameterStore& store, const nlohmann::json& header) {
    nlohmann::json modules = nlohmann::json::object();
    for (const auto& [name, p] : store) {
        const auto [module, pname] = split_name(name);
        modules[module][pname] = {{"shape", p.value.shape}, {"data", p.value.values}};
    }
    return {{"version", kCheckpointVersion}, {"header", header}, {"modules", modules}};
}

void load_checkpoint(const nlohmann::json& checkpoint, ParameterStore& store) {
    check_version(checkpoint);
    std::size_t seen = 0;
    try {
        for_each_stored(checkpoint, [&](const std::string& name, const Shape& shape, std::vector<double> data) {
            if (!store.contains(name)) throw DataError("checkpoint: unexpected parameter " + name);
            auto& p = store.at(name);
            if (p.value.shape != shape || data.size() != numel(shape)) {
                throw DataError("checkpoint: parameter " + name + " has shape " + shape_str(shape) + ", expected " +
                                shape_str(p.value.shape));
            }
            p.value.values = std::move(data);
            ++seen;
        });
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: malformed entry: ") + e.what());
    }
    if (seen != store.size()) {
        throw DataError("checkpoint: " + std::to_string(store.size() - seen) + " parameters missing");
    }
}

ParameterStore store_from_checkpoint(const nlohmann::json& checkpoint) {
    check_version(checkpoint);
    ParameterStore store;
    std::mt19937_64 unused(0);
    try {
        for_each_stored(checkpoint, [&](const std::string& name, const Shape& shape, std::vector<double> data) {
            if (data.size() != numel(shape)) throw DataError("checkpoint: parameter " + name + " size mismatch");
            auto& p = store.create(name, shape, ParameterStore::Init::zeros, unused);
            p.value.values = std::move(data);
        });
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: malformed entry: ") + e.what());
    }
    return store;
}

}  // namespace elastica::ad
