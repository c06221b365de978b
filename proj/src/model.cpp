#include "droc/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "droc/error.hpp"

namespace droc {

using json = nlohmann::json;

namespace {

constexpr double kRhoClampSlack = 1e-6;

}  // namespace

int reject_option_label(double f, double rho) {
  if (f > rho) return 1;
  if (f < -rho) return -1;
  return 0;
}

Model::Model(KernelSpec kernel, std::vector<SupportVector> support, double b, double rho,
             Standardization standardization, Hyperparams hyper, Diagnostics diagnostics)
    : kernel_(kernel),
      support_(std::move(support)),
      b_(b),
      rho_(rho),
      standardization_(std::move(standardization)),
      hyper_(hyper),
      diagnostics_(std::move(diagnostics)) {
  validate(kernel_);
  if (!std::isfinite(b_) || !std::isfinite(rho_)) {
    throw ModelIOError(ModelIOError::Kind::kIntegrity, "model bias or rho is not finite");
  }
  if (rho_ < -kRhoClampSlack) {
    throw ModelIOError(ModelIOError::Kind::kIntegrity,
                       "model rho " + std::to_string(rho_) + " is negative");
  }
  if (rho_ < 0.0) rho_ = 0.0;
  if (standardization_.mean.size() != standardization_.scale.size()) {
    throw ModelIOError(ModelIOError::Kind::kIntegrity, "standardization vectors differ in length");
  }
  for (const double s : standardization_.scale) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ModelIOError(ModelIOError::Kind::kIntegrity, "standardization scale must be positive");
    }
  }
  const std::size_t p = dim();
  for (const auto& sv : support_) {
    if (!standardization_.empty() && sv.x.size() != p) {
      throw ModelIOError(ModelIOError::Kind::kIntegrity, "support vector dimension mismatch");
    }
    if (!support_.empty() && sv.x.size() != support_.front().x.size()) {
      throw ModelIOError(ModelIOError::Kind::kIntegrity, "support vectors differ in dimension");
    }
    if (!std::isfinite(sv.coeff)) {
      throw ModelIOError(ModelIOError::Kind::kIntegrity, "support coefficient is not finite");
    }
  }
}

double Model::decision_function_standardized(std::span<const double> z) const {
  double f = b_;
  for (const auto& sv : support_) f += sv.coeff * kernel_eval(kernel_, sv.x, z);
  return f;
}

double Model::decision_function(std::span<const double> x) const {
  if (standardization_.empty()) return decision_function_standardized(x);
  if (x.size() != dim()) {
    throw DimensionMismatch("model expects " + std::to_string(dim()) + " features, got " +
                            std::to_string(x.size()));
  }
  std::vector<double> z(x.begin(), x.end());
  standardize_apply_inplace(standardization_, z);
  return decision_function_standardized(z);
}

int Model::predict(std::span<const double> x) const {
  return reject_option_label(decision_function(x), rho_);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

// Writes JSON with every floating-point number at 17 significant digits.
// Object keys come out sorted (nlohmann's default map), so the text is
// canonical for a given document.
void write_canonical(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        write_canonical(it.value(), out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ',';
        first = false;
        write_canonical(item, out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
      std::string text(buf);
      // Keep the value a float on re-read.
      if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
      out += text;
      break;
    }
    default:
      out += j.dump();
  }
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json payload(const Model& model) {
  json doc;
  doc["schema_version"] = kModelSchemaVersion;
  doc["kernel"] = {{"kind", to_string(model.kernel().kind)}, {"gamma", model.kernel().gamma}};
  doc["b"] = model.bias();
  doc["rho"] = model.rho();
  const Hyperparams& h = model.hyper();
  doc["hyper"] = {{"C", h.C},
                  {"d", h.d},
                  {"mu", h.mu},
                  {"dc_max_iter", h.dc_max_iter},
                  {"dc_tol", h.dc_tol},
                  {"qp_tol", h.qp_tol},
                  {"sv_tol", h.sv_tol}};
  doc["standardization"] = {{"mean", model.standardization().mean},
                            {"scale", model.standardization().scale}};
  json support = json::array();
  for (const auto& sv : model.support()) support.push_back({{"x", sv.x}, {"coeff", sv.coeff}});
  doc["support"] = std::move(support);
  const Diagnostics& diag = model.diagnostics();
  doc["diagnostics"] = {{"dc_iterations", diag.dc_iterations},
                        {"final_risk", diag.final_risk},
                        {"converged", diag.converged},
                        {"stop_reason", diag.stop_reason},
                        {"seed", diag.seed}};
  return doc;
}

[[noreturn]] void malformed(const std::string& what) {
  throw ModelIOError(ModelIOError::Kind::kMalformed, "malformed model document: " + what);
}

template <typename T>
T field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) malformed(std::string("missing field '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    malformed(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string to_json_string(const Model& model) {
  json doc = payload(model);
  std::string body;
  write_canonical(doc, body);
  doc["checksum"] = hex(fnv1a(body));
  std::string text;
  write_canonical(doc, text);
  text += '\n';
  return text;
}

Model model_from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  if (!doc.is_object()) malformed("top level is not an object");
  const int version = field<int>(doc, "schema_version");
  if (version != kModelSchemaVersion) {
    throw ModelIOError(ModelIOError::Kind::kVersion,
                       "unsupported model schema_version " + std::to_string(version) +
                           " (expected " + std::to_string(kModelSchemaVersion) + ")");
  }
  if (doc.contains("checksum")) {
    const auto stored = field<std::string>(doc, "checksum");
    json body_doc = doc;
    body_doc.erase("checksum");
    std::string body;
    write_canonical(body_doc, body);
    if (hex(fnv1a(body)) != stored) {
      throw ModelIOError(ModelIOError::Kind::kChecksum, "model checksum mismatch");
    }
  } else {
    malformed("missing field 'checksum'");
  }

  const json& kernel_doc = doc.contains("kernel") ? doc["kernel"] : json();
  KernelSpec kernel;
  try {
    kernel.kind = parse_kernel_kind(field<std::string>(kernel_doc, "kind"));
  } catch (const InvalidArgument& e) {
    malformed(e.what());
  }
  kernel.gamma = field<double>(kernel_doc, "gamma");

  const json& hyper_doc = doc.contains("hyper") ? doc["hyper"] : json();
  Hyperparams hyper;
  hyper.C = field<double>(hyper_doc, "C");
  hyper.d = field<double>(hyper_doc, "d");
  hyper.mu = field<double>(hyper_doc, "mu");
  hyper.kernel = kernel;
  if (hyper_doc.contains("dc_max_iter")) hyper.dc_max_iter = field<std::size_t>(hyper_doc, "dc_max_iter");
  if (hyper_doc.contains("dc_tol")) hyper.dc_tol = field<double>(hyper_doc, "dc_tol");
  if (hyper_doc.contains("qp_tol")) hyper.qp_tol = field<double>(hyper_doc, "qp_tol");
  if (hyper_doc.contains("sv_tol")) hyper.sv_tol = field<double>(hyper_doc, "sv_tol");

  const json& std_doc = doc.contains("standardization") ? doc["standardization"] : json();
  Standardization standardization{field<std::vector<double>>(std_doc, "mean"),
                                  field<std::vector<double>>(std_doc, "scale")};

  if (!doc.contains("support") || !doc["support"].is_array()) malformed("missing 'support' array");
  std::vector<SupportVector> support;
  for (const auto& item : doc["support"]) {
    support.push_back({field<std::vector<double>>(item, "x"), field<double>(item, "coeff")});
  }

  Diagnostics diag;
  if (doc.contains("diagnostics")) {
    const json& d = doc["diagnostics"];
    diag.dc_iterations = field<std::size_t>(d, "dc_iterations");
    diag.final_risk = field<double>(d, "final_risk");
    diag.converged = field<bool>(d, "converged");
    diag.stop_reason = field<std::string>(d, "stop_reason");
    diag.seed = field<std::uint64_t>(d, "seed");
  }

  try {
    return Model(kernel, std::move(support), field<double>(doc, "b"), field<double>(doc, "rho"),
                 std::move(standardization), hyper, std::move(diag));
  } catch (const InvalidArgument& e) {
    malformed(e.what());
  }
}

void save(const Model& model, const std::filesystem::path& path) {
  const std::string text = to_json_string(model);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      throw ModelIOError(ModelIOError::Kind::kIO, "cannot write '" + tmp.string() + "'");
    }
    out << text;
    if (!out) throw ModelIOError(ModelIOError::Kind::kIO, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw ModelIOError(ModelIOError::Kind::kIO, "cannot move model into '" + path.string() + "'");
  }
}

Model load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIOError(ModelIOError::Kind::kIO, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json_string(buffer.str());
}

}  // namespace droc
