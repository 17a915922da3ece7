#include "tvsn/model/arch.hpp"

#include "tvsn/core/error.hpp"

namespace tvsn::model {

nlohmann::json ArchDescriptor::to_json() const {
  return {{"size", size},
          {"channels", channels},
          {"encoding_dim", encoding_dim},
          {"enc_widths", enc_widths},
          {"dec_widths", dec_widths},
          {"bottleneck", bottleneck},
          {"embed", embed},
          {"disc_widths", disc_widths},
          {"perc_widths", perc_widths},
          {"perc_classes", perc_classes},
          {"predict_background", predict_background}};
}

ArchDescriptor ArchDescriptor::from_json(const nlohmann::json& j) {
  ArchDescriptor a;
  try {
    a.size = j.at("size").get<int>();
    a.channels = j.at("channels").get<int>();
    a.encoding_dim = j.at("encoding_dim").get<int>();
    a.enc_widths = j.at("enc_widths").get<std::vector<int>>();
    a.dec_widths = j.at("dec_widths").get<std::vector<int>>();
    a.bottleneck = j.at("bottleneck").get<int>();
    a.embed = j.at("embed").get<int>();
    a.disc_widths = j.at("disc_widths").get<std::vector<int>>();
    a.perc_widths = j.at("perc_widths").get<std::vector<int>>();
    a.perc_classes = j.at("perc_classes").get<int>();
    a.predict_background = j.at("predict_background").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("architecture descriptor: ") + e.what());
  }
  a.validate();
  return a;
}

ArchDescriptor ArchDescriptor::for_size(int size) {
  ArchDescriptor a;
  if (size < 64 || (size & (size - 1)) != 0) {
    fail(ErrorKind::Parameter, "image size must be a power of two >= 64, got " + std::to_string(size));
  }
  a.size = size;
  for (int s = 64; s < size; s *= 2) {
    a.enc_widths.push_back(a.enc_widths.back());
    a.dec_widths.insert(a.dec_widths.begin(), a.enc_widths.back());
    a.disc_widths.push_back(a.disc_widths.back());
  }
  a.validate();
  return a;
}

void ArchDescriptor::validate() const {
  const auto bad = [](const std::string& what) { fail(ErrorKind::Parameter, "architecture: " + what); };
  if (enc_widths.empty() || enc_widths.size() != dec_widths.size()) bad("encoder and decoder depths differ");
  if (size <= 0 || (size >> enc_widths.size()) < 1 || ((size >> enc_widths.size()) << enc_widths.size()) != size) {
    bad("size " + std::to_string(size) + " is not divisible by 2^depth");
  }
  if (disc_widths.size() < 3 || (size >> disc_widths.size()) < 1) bad("discriminator needs >= 3 blocks that fit the size");
  if (perc_widths.size() != 3) bad("perceptual network has exactly 3 blocks");
  if (channels != 3 || encoding_dim != 17) bad("expects RGB input and a 17-D transform encoding");
  if (bottleneck < 1 || embed < 1 || perc_classes < 2) bad("non-positive widths");
}

}  // namespace tvsn::model
