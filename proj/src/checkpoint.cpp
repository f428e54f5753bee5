#include "gfnlab/errors.hpp"
#include "gfnlab/models.hpp"
#include "gfnlab/reports.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace gfnlab {

namespace {

constexpr const char* kCheckpointMagic = "GFNLAB-CHECKPOINT 1";

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

std::vector<NamedTensor> checkpoint_tensors(Model& model) {
  std::vector<NamedTensor> out;
  for (auto& p : model.parameters()) out.push_back({p.name, &p.value});
  for (auto& bn : model.batch_norm_states()) {
    out.push_back({bn.name + ".running_mean", &bn.state->running_mean});
    out.push_back({bn.name + ".running_var", &bn.state->running_var});
  }
  return out;
}

}  // namespace

void save_checkpoint(Model& model, const std::filesystem::path& path) {
  const auto tensors = checkpoint_tensors(model);
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& t : tensors) entries.push_back({{"name", t.name}, {"rows", t.tensor->rows()}, {"cols", t.tensor->cols()}});
  const nlohmann::json header = {
      {"config", to_json(model.config())}, {"input_dim", model.input_dim()}, {"tensors", entries}};

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write checkpoint " + path.string());
  out << kCheckpointMagic << '\n' << header.dump() << '\n';
  for (const auto& t : tensors)
    out.write(reinterpret_cast<const char*>(t.tensor->data()),
              static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(t.tensor->size())));
  if (!out) throw ParseError("failed writing checkpoint " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  std::string magic, header_line;
  if (!std::getline(in, magic) || magic != kCheckpointMagic || !std::getline(in, header_line))
    throw ParseError(path.string() + " is not a gfnlab checkpoint");
  const auto header = nlohmann::json::parse(header_line, nullptr, false);
  if (header.is_discarded()) throw ParseError("checkpoint header in " + path.string() + " is not valid JSON");

  Model model(model_config_from_json(header.at("config")), header.at("input_dim").get<Index>(), 0);
  auto tensors = checkpoint_tensors(model);
  const auto& entries = header.at("tensors");
  if (entries.size() != tensors.size())
    throw ParseError("checkpoint " + path.string() + " has " + std::to_string(entries.size()) +
                     " tensors, model expects " + std::to_string(tensors.size()));
  for (const auto& e : entries) {
    const auto name = e.at("name").get<std::string>();
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const NamedTensor& t) { return t.name == name; });
    if (it == tensors.end()) throw ParseError("checkpoint tensor '" + name + "' is unknown to the model");
    Tensor& t = *it->tensor;
    if (t.rows() != e.at("rows").get<Index>() || t.cols() != e.at("cols").get<Index>())
      throw ParseError("checkpoint tensor '" + name + "' has the wrong shape");
    if (!in.read(reinterpret_cast<char*>(t.data()),
                 static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(t.size()))))
      throw ParseError("checkpoint " + path.string() + " is truncated");
  }
  return model;
}

}  // namespace gfnlab
