#include "idskit/model_io.hpp"

#include <fstream>

#include "idskit/ensembles.hpp"
#include "idskit/learners.hpp"

namespace idskit {

namespace {

constexpr char kMagic[8] = {'I', 'D', 'S', 'K', 'I', 'T', 'M', '1'};

enum : std::uint8_t {
    kTagTree = 1,
    kTagLinear = 2,
    kTagKnn = 3,
    kTagMlp = 4,
    kTagVoting = 5,
    kTagMeanEnsemble = 6,
    kTagAdaBoost = 7,
    kTagGradientBoost = 8,
    kTagStacked = 9,
    kTagPipeline = 10,
};

std::uint8_t tag_of(const Model& model) {
    const std::string kind = model.kind();
    if (dynamic_cast<const TreeModel*>(&model)) return kTagTree;
    if (dynamic_cast<const LinearModel*>(&model)) return kTagLinear;
    if (dynamic_cast<const KnnModel*>(&model)) return kTagKnn;
    if (dynamic_cast<const MlpModel*>(&model)) return kTagMlp;
    if (dynamic_cast<const VotingModel*>(&model)) return kTagVoting;
    if (dynamic_cast<const MeanEnsembleModel*>(&model)) return kTagMeanEnsemble;
    if (dynamic_cast<const AdaBoostModel*>(&model)) return kTagAdaBoost;
    if (dynamic_cast<const GradientBoostModel*>(&model)) return kTagGradientBoost;
    if (dynamic_cast<const StackedModel*>(&model)) return kTagStacked;
    if (dynamic_cast<const PipelineModel*>(&model)) return kTagPipeline;
    throw IoError("cannot serialize model kind '" + kind + "'");
}

}  // namespace

void write_model(const Model& model, BinaryWriter& w) {
    w.u8(tag_of(model));
    model.save_payload(w);
}

ModelPtr read_model(BinaryReader& r) {
    switch (r.u8()) {
        case kTagTree: return TreeModel::load_payload(r);
        case kTagLinear: return LinearModel::load_payload(r);
        case kTagKnn: return KnnModel::load_payload(r);
        case kTagMlp: return MlpModel::load_payload(r);
        case kTagVoting: return VotingModel::load_payload(r);
        case kTagMeanEnsemble: return MeanEnsembleModel::load_payload(r);
        case kTagAdaBoost: return AdaBoostModel::load_payload(r);
        case kTagGradientBoost: return GradientBoostModel::load_payload(r);
        case kTagStacked: return StackedModel::load_payload(r);
        case kTagPipeline: return PipelineModel::load_payload(r);
        default: throw IoError("unknown model tag in stream");
    }
}

void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open model file for writing: " + path);
    out.write(kMagic, sizeof kMagic);
    BinaryWriter w(out);
    write_model(model, w);
    if (!out) throw IoError("model write failed: " + path);
}

ModelPtr load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::string_view(magic, 8) != std::string_view(kMagic, 8))
        throw IoError("not a model file: " + path);
    BinaryReader r(in);
    return read_model(r);
}

// --- composite model payloads (live here to reuse write_model/read_model) ---

void VotingModel::save_payload(BinaryWriter& w) const {
    w.u64(static_cast<std::uint64_t>(kind_));
    w.f64_vec(weights_);
    w.u64(members_.size());
    for (const auto& m : members_) write_model(*m, w);
}

std::shared_ptr<VotingModel> VotingModel::load_payload(BinaryReader& r) {
    const auto kind = static_cast<EnsembleKind>(r.u64());
    std::vector<double> weights = r.f64_vec();
    std::vector<ModelPtr> members(r.u64());
    for (auto& m : members) m = read_model(r);
    return std::make_shared<VotingModel>(kind, std::move(members), std::move(weights));
}

void MeanEnsembleModel::save_payload(BinaryWriter& w) const {
    w.str(kind_);
    w.str(summary_);
    w.u64(members_.size());
    for (const auto& m : members_) write_model(*m, w);
}

std::shared_ptr<MeanEnsembleModel> MeanEnsembleModel::load_payload(BinaryReader& r) {
    std::string kind = r.str();
    std::string summary = r.str();
    std::vector<ModelPtr> members(r.u64());
    for (auto& m : members) m = read_model(r);
    return std::make_shared<MeanEnsembleModel>(std::move(kind), std::move(members),
                                               std::move(summary));
}

void StackedModel::save_payload(BinaryWriter& w) const {
    w.str(kind_);
    w.u64(meta_train_rows_);
    write_model(*meta_, w);
    w.u64(members_.size());
    for (const auto& m : members_) write_model(*m, w);
}

std::shared_ptr<StackedModel> StackedModel::load_payload(BinaryReader& r) {
    std::string kind = r.str();
    const std::size_t meta_rows = r.u64();
    ModelPtr meta = read_model(r);
    std::vector<ModelPtr> members(r.u64());
    for (auto& m : members) m = read_model(r);
    return std::make_shared<StackedModel>(std::move(kind), std::move(members), std::move(meta),
                                          meta_rows);
}

void PipelineModel::save_payload(BinaryWriter& w) const {
    w.matrix(pca_.components);
    w.f64_vec(pca_.mean);
    w.f64_vec(pca_.explained_variance);
    write_model(*inner_, w);
}

std::shared_ptr<PipelineModel> PipelineModel::load_payload(BinaryReader& r) {
    PcaModel pca;
    pca.components = r.matrix();
    pca.mean = r.f64_vec();
    pca.explained_variance = r.f64_vec();
    ModelPtr inner = read_model(r);
    return std::make_shared<PipelineModel>(std::move(pca), std::move(inner));
}

}  // namespace idskit
