#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treebed/distortion.hpp"
#include "treebed/error.hpp"
#include "treebed/io.hpp"
#include "treebed/spanning_tree.hpp"
#include "treebed/ultrametric.hpp"

namespace treebed {

using json = nlohmann::json;

namespace detail {

template <class T>
T field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("missing JSON field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string("bad JSON field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline json to_json(const UltrametricTree& t) {
  json nodes = json::array();
  auto list = t.nodes();
  for (std::size_t i = 0; i < list.size(); ++i) {
    json nd{{"id", i}, {"label", list[i].label}};
    if (list[i].leaf_point) {
      nd["leaf_point"] = *list[i].leaf_point;
    } else {
      nd["children"] = list[i].children;
    }
    nodes.push_back(std::move(nd));
  }
  return json{{"n", t.size()}, {"root", 0}, {"nodes", std::move(nodes)}};
}

inline UltrametricTree ultrametric_from_json(const json& j) {
  const json& arr = j.at("nodes");
  std::vector<UltrametricTree::Node> nodes(arr.size());
  for (const json& nd : arr) {
    auto id = detail::field<std::size_t>(nd, "id");
    if (id >= nodes.size()) throw Error("ultrametric node id " + std::to_string(id) + " out of range");
    nodes[id].label = detail::field<double>(nd, "label");
    if (nd.contains("leaf_point")) nodes[id].leaf_point = detail::field<PointId>(nd, "leaf_point");
    if (nd.contains("children")) nodes[id].children = detail::field<std::vector<std::size_t>>(nd, "children");
  }
  return UltrametricTree(std::move(nodes));
}

inline json to_json(const CutCertificate& c) {
  json del = json::array();
  for (const Deletion& d : c.deleted) del.push_back({{"r", d.r}, {"eps", d.eps}});
  return json{{"u", c.u},       {"eps_hat", c.eps_hat}, {"S_lo", c.s_lo}, {"S_hi", c.s_hi},
              {"deleted", del}, {"rho", c.rho},         {"r", c.r}};
}

inline CutCertificate cut_from_json(const json& j) {
  CutCertificate c;
  c.u = detail::field<PointId>(j, "u");
  c.eps_hat = detail::field<double>(j, "eps_hat");
  c.s_lo = detail::field<double>(j, "S_lo");
  c.s_hi = detail::field<double>(j, "S_hi");
  for (const json& d : j.at("deleted")) c.deleted.push_back({detail::field<double>(d, "r"), detail::field<double>(d, "eps")});
  c.rho = detail::field<double>(j, "rho");
  c.r = detail::field<double>(j, "r");
  return c;
}

inline json to_json(const ConstructionTrace& trace) {
  json nodes = json::array();
  for (const TraceNode& nd : trace.nodes) {
    json j{{"id", nd.id},
           {"parent", nd.parent ? json(*nd.parent) : json(nullptr)},
           {"points", nd.points},
           {"center", nd.center},
           {"rad", nd.rad},
           {"is_reset", nd.is_reset},
           {"children", nd.children}};
    j["params"] = {{"n_reset", nd.params.n_reset}, {"Lambda", nd.params.Lambda},
                   {"lambda_hat", nd.params.lambda_hat}, {"beta", nd.params.beta},
                   {"eps_lim", nd.params.eps_lim}, {"alpha", nd.params.alpha}};
    json links = json::array();
    for (const StarLink& l : nd.links) links.push_back({{"y", l.y}, {"x", l.x}, {"edge", l.edge}, {"w", l.w}});
    j["links"] = std::move(links);
    json cuts = json::array();
    for (const DecomposeCertificate& c : nd.cuts) {
      cuts.push_back({{"case", c.which_case}, {"theta", c.theta}, {"alpha", c.alpha}, {"origin", c.origin},
                      {"inside", c.inside}, {"outside", c.outside}, {"cut", to_json(c.cut)}});
    }
    j["cuts"] = std::move(cuts);
    if (nd.prob) {
      const ProbRecord& p = *nd.prob;
      j["prob"] = {{"seed", p.seed},          {"gamma", p.gamma},           {"beta_rand", p.beta_rand},
                   {"alpha", p.alpha},        {"central_radius", p.central_radius},
                   {"cone_radii", p.cone_radii}, {"chi", p.chi},            {"v", p.v}};
    }
    nodes.push_back(std::move(j));
  }
  return json{{"nodes", std::move(nodes)}};
}

inline ConstructionTrace trace_from_json(const json& j) {
  ConstructionTrace trace;
  for (const json& nd : j.at("nodes")) {
    TraceNode t;
    t.id = detail::field<std::size_t>(nd, "id");
    if (!nd.at("parent").is_null()) t.parent = detail::field<std::size_t>(nd, "parent");
    t.points = detail::field<std::vector<PointId>>(nd, "points");
    t.center = detail::field<PointId>(nd, "center");
    t.rad = detail::field<double>(nd, "rad");
    t.is_reset = detail::field<bool>(nd, "is_reset");
    t.children = detail::field<std::vector<std::size_t>>(nd, "children");
    const json& p = nd.at("params");
    t.params = {detail::field<double>(p, "n_reset"),    detail::field<double>(p, "Lambda"),
                detail::field<double>(p, "lambda_hat"), detail::field<double>(p, "beta"),
                detail::field<double>(p, "eps_lim"),    detail::field<double>(p, "alpha")};
    for (const json& l : nd.at("links")) {
      t.links.push_back({detail::field<PointId>(l, "y"), detail::field<PointId>(l, "x"),
                         detail::field<std::uint32_t>(l, "edge"), detail::field<double>(l, "w")});
    }
    for (const json& c : nd.at("cuts")) {
      DecomposeCertificate d;
      d.which_case = detail::field<int>(c, "case");
      d.theta = detail::field<double>(c, "theta");
      d.alpha = detail::field<double>(c, "alpha");
      d.origin = detail::field<double>(c, "origin");
      d.inside = detail::field<std::size_t>(c, "inside");
      d.outside = detail::field<std::size_t>(c, "outside");
      d.cut = cut_from_json(c.at("cut"));
      t.cuts.push_back(std::move(d));
    }
    if (nd.contains("prob")) {
      const json& q = nd.at("prob");
      ProbRecord r;
      r.seed = detail::field<std::uint64_t>(q, "seed");
      r.gamma = detail::field<double>(q, "gamma");
      r.beta_rand = detail::field<double>(q, "beta_rand");
      r.alpha = detail::field<double>(q, "alpha");
      r.central_radius = detail::field<double>(q, "central_radius");
      r.cone_radii = detail::field<std::vector<double>>(q, "cone_radii");
      r.chi = detail::field<std::vector<double>>(q, "chi");
      r.v = detail::field<std::vector<PointId>>(q, "v");
      t.prob = std::move(r);
    }
    if (t.id != trace.nodes.size()) throw Error("trace nodes must be listed in id order");
    trace.nodes.push_back(std::move(t));
  }
  return trace;
}

inline json to_json(const DistortionReport& r) {
  json lq = json::object();
  for (const auto& [k, v] : r.lq) lq[k] = v;
  json profile = json::array();
  std::vector<double> sorted = r.values;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    profile.push_back({{"rank", k + 1},
                       {"epsilon", static_cast<double>(k + 1) / static_cast<double>(sorted.size())},
                       {"distortion", sorted[k]}});
  }
  json bad = json::array();
  for (const BadCount& b : r.bad_counts) {
    bad.push_back({{"epsilon", b.eps}, {"threshold", b.threshold}, {"count", b.count}, {"budget", b.budget}});
  }
  return json{{"n", r.n},
              {"lq", std::move(lq)},
              {"profile", std::move(profile)},
              {"bad_counts", std::move(bad)},
              {"contractions", r.contractions},
              {"checks",
               {{"scaling", to_string(r.scaling_state)},
                {"radius", to_string(r.radius_state)},
                {"budget", to_string(r.budget_state)}}}};
}

inline void write_profile_csv(std::ostream& out, std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  out << "rank,epsilon,distortion\n";
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    out << k + 1 << ',' << format_real(static_cast<double>(k + 1) / static_cast<double>(sorted.size())) << ','
        << format_real(sorted[k]) << '\n';
  }
}

}  // namespace treebed
