#include "xtc/attr_schema.hpp"

namespace xtc {

const MetaClassSchema& default_metaclass_schema() {
  static const MetaClassSchema schema({
      {"person", {"person"},
       {"upper clothing type/color", "lower clothing type/color", "held object type", "headwear/eyewear"}},
      {"vehicle", {"airplane", "bicycle", "boat", "bus", "car", "motorcycle", "train", "truck"},
       {"primary color", "viewpoint angle", "text/number visible"}},
      {"traffic control", {"traffic light", "stop sign", "parking meter"},
       {"light color state", "text on sign", "mounted position"}},
      {"street furniture", {"bench", "fire hydrant"}, {"primary color", "material type"}},
      {"animal",
       {"bear", "bird", "cat", "cow", "dog", "elephant", "giraffe", "horse", "sheep", "zebra"},
       {"primary color", "pattern type", "body position"}},
      {"bags accessories", {"backpack", "handbag", "suitcase", "umbrella"},
       {"primary color", "pattern type", "open/closed state"}},
      {"wearables", {"tie"}, {"primary color", "pattern type"}},
      {"sports equipment",
       {"baseball bat", "baseball glove", "frisbee", "kite", "skateboard", "skis", "snowboard",
        "sports ball", "surfboard", "tennis racket"},
       {"primary color", "brand/text visible"}},
      {"containers", {"bottle", "bowl", "cup", "wine glass"},
       {"primary color", "material type", "content visible"}},
      {"utensils", {"fork", "knife", "spoon"}, {"primary color", "material type"}},
      {"prepared food", {"cake", "donut", "hot dog", "pizza", "sandwich", "food-other-merged"},
       {"primary color", "topping type"}},
      {"raw produce", {"apple", "banana", "broccoli", "carrot", "fruit", "orange"}, {"primary color"}},
      {"furniture", {"bed", "chair", "couch", "dining table"}, {"primary color", "material type"}},
      {"potted veg.", {"potted plant", "flower"}, {"primary color", "container type"}},
      {"landscape veg.", {"grass-merged", "tree-merged"}, {"primary color"}},
      {"screen devices", {"cell phone", "laptop", "tv"},
       {"primary color", "brand/text visible", "screen on/off"}},
      {"input devices", {"keyboard", "mouse", "remote"}, {"primary color", "brand/text visible"}},
      {"door appliances", {"microwave", "oven", "refrigerator", "toaster"},
       {"primary color", "material type", "door open/closed"}},
      {"bathroom", {"sink", "toilet"}, {"primary color", "material type"}},
      {"indoor objects",
       {"book", "clock", "hair drier", "scissors", "teddy bear", "toothbrush", "vase"},
       {"primary color", "text visible", "content visible"}},
      {"textiles", {"banner", "blanket", "curtain", "pillow", "towel", "rug-merged"},
       {"primary color", "pattern type", "text visible"}},
      {"surfaces", {"road", "pavement-merged", "sand", "gravel", "snow", "dirt-merged"},
       {"surface material", "marking type", "wet/dry state"}},
      {"buildings", {"building-other-merged", "house", "tent"},
       {"primary color", "material type", "window count"}},
      {"infrastructure", {"bridge", "fence-merged", "stairs", "roof", "platform", "railroad"},
       {"primary color", "material type"}},
      {"openable", {"door-stuff", "window-blind", "window-other"},
       {"material type", "primary color", "open/closed state"}},
      {"room surfaces",
       {"ceiling-merged", "floor-other-merged", "floor-wood", "wall-brick", "wall-other-merged",
        "wall-stone", "wall-tile", "wall-wood"},
       {"material type", "primary color"}},
      {"storage", {"cabinet-merged", "shelf"}, {"primary color", "material type", "drawer count"}},
      {"work surfaces", {"table-merged", "counter"}, {"primary color", "material type"}},
      {"outdoor elem.",
       {"cardboard", "light", "mirror-stuff", "net", "paper-merged", "playingfield", "rock-merged"},
       {"primary color", "material type", "text visible"}},
      {"natural env.", {"mountain-merged", "river", "sea", "sky-other-merged", "water-other"},
       {"primary color", "weather type", "wave/cloud visible"}},
  });
  return schema;
}

}  // namespace xtc
