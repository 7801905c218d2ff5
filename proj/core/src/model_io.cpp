#include "cwlssvm/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cwlssvm/error.hpp"

namespace cwlssvm {

using nlohmann::json;

namespace {

json to_array(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) {
        a.push_back(v[i]);
    }
    return a;
}

Vector from_array(const json& a, const char* field) {
    if (!a.is_array()) {
        throw IoError(std::string("model JSON: field '") + field + "' must be an array");
    }
    Vector v(static_cast<Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) {
            throw IoError(std::string("model JSON: field '") + field + "' entry " + std::to_string(i) +
                          " is not a number");
        }
        v[static_cast<Index>(i)] = a[i].get<double>();
    }
    return v;
}

const json& require(const json& doc, const char* field) {
    auto it = doc.find(field);
    if (it == doc.end()) {
        throw IoError(std::string("model JSON: missing field '") + field + "'");
    }
    return *it;
}

} // namespace

std::string serialize_model(const TrainedModel& model, int indent) {
    json doc;
    doc["task"] = std::string(to_string(model.task));
    doc["D"] = model.components();
    doc["P"] = model.inputs.rows();
    doc["N"] = model.points();
    doc["alpha"] = to_array(model.alpha);
    doc["b"] = model.bias;
    json sd = json::array();
    for (Index d : model.retained) {
        sd.push_back(d + 1);
    }
    doc["S_D"] = sd;
    json kernels = json::array();
    for (const auto& k : model.kernel.components()) {
        json e;
        e["family"] = std::string(to_string(k.family));
        if (k.family == KernelFamily::Rbf) {
            e["sigma"] = k.sigma;
        }
        e["input"] = k.input + 1;
        kernels.push_back(e);
    }
    doc["kernel"] = kernels;
    json x = json::array();
    for (Index k = 0; k < model.inputs.cols(); ++k) {
        x.push_back(to_array(model.inputs.col(k)));
    }
    doc["X"] = x;
    if (model.task == Task::Classification) {
        doc["Y"] = to_array(model.labels);
    }
    if (model.eta) {
        doc["eta"] = to_array(*model.eta);
    }
    doc["component_norms"] = to_array(model.component_norms);
    return doc.dump(indent);
}

TrainedModel parse_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("model JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw IoError("model JSON: top level must be an object");
    }
    try {
        TrainedModel m;
        m.task = task_from_string(require(doc, "task").get<std::string>());
        m.alpha = from_array(require(doc, "alpha"), "alpha");
        m.bias = require(doc, "b").get<double>();

        std::vector<ComponentKernel> comps;
        for (const auto& e : require(doc, "kernel")) {
            ComponentKernel k;
            k.family = kernel_family_from_string(require(e, "family").get<std::string>());
            k.sigma = k.family == KernelFamily::Rbf ? require(e, "sigma").get<double>() : 1.0;
            k.input = require(e, "input").get<Index>() - 1;
            comps.push_back(k);
        }
        m.kernel = KernelSpec(std::move(comps));
        const auto d = require(doc, "D").get<Index>();
        if (d != m.kernel.size()) {
            throw IoError("model JSON: D = " + std::to_string(d) + " but kernel lists " +
                          std::to_string(m.kernel.size()) + " components");
        }

        const json& x = require(doc, "X");
        const auto n = require(doc, "N").get<Index>();
        if (!x.is_array() || static_cast<Index>(x.size()) != n || m.alpha.size() != n) {
            throw IoError("model JSON: X, alpha and N disagree on the number of training points");
        }
        const Index p = doc.contains("P") ? doc["P"].get<Index>() : (n > 0 ? static_cast<Index>(x[0].size()) : 0);
        m.inputs.resize(p, n);
        for (Index k = 0; k < n; ++k) {
            const Vector row = from_array(x[static_cast<std::size_t>(k)], "X");
            if (row.size() != p) {
                throw IoError("model JSON: row " + std::to_string(k + 1) + " of X has " +
                              std::to_string(row.size()) + " entries, expected " + std::to_string(p));
            }
            m.inputs.col(k) = row;
        }
        if (p < m.kernel.required_inputs()) {
            throw IoError("model JSON: kernel reads more inputs than X provides");
        }

        for (const auto& s : require(doc, "S_D")) {
            const auto idx = s.get<Index>() - 1;
            if (idx < 0 || idx >= d) {
                throw IoError("model JSON: S_D entry " + std::to_string(idx + 1) + " out of range");
            }
            m.retained.push_back(idx);
        }
        if (m.task == Task::Classification) {
            m.labels = from_array(require(doc, "Y"), "Y");
            if (m.labels.size() != n) {
                throw IoError("model JSON: Y has the wrong length");
            }
        }
        if (doc.contains("eta") && !doc["eta"].is_null()) {
            m.eta = from_array(doc["eta"], "eta");
            if (m.eta->size() != d) {
                throw IoError("model JSON: eta has the wrong length");
            }
        }
        if (doc.contains("component_norms")) {
            m.component_norms = from_array(doc["component_norms"], "component_norms");
        }
        return m;
    } catch (const json::exception& e) {
        throw IoError(std::string("model JSON: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("model JSON: ") + e.what());
    }
}

void save_model(const TrainedModel& model, const std::string& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    os << serialize_model(model) << '\n';
    if (!os) {
        throw IoError("failed writing '" + path + "'");
    }
}

TrainedModel load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open model file '" + path + "'");
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_model(ss.str());
}

} // namespace cwlssvm
