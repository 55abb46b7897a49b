//! Default class vocabulary, function descriptions and hazard table.
//!
//! All three are plain data and can be replaced from the run config.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Class id used for open ground, the source of free space.
pub const DEFAULT_BACKGROUND: u16 = 0;

/// `(id, name)` of the background plus 22 object categories.
pub const DEFAULT_CLASSES: [(u16, &str); 23] = [
    (0, "open ground"),
    (1, "road"),
    (2, "building"),
    (3, "car"),
    (4, "truck"),
    (5, "bus"),
    (6, "tree"),
    (7, "grass"),
    (8, "water"),
    (9, "bridge"),
    (10, "parking lot"),
    (11, "sidewalk"),
    (12, "fence"),
    (13, "utility pole"),
    (14, "solar panel"),
    (15, "shipping container"),
    (16, "crane"),
    (17, "rooftop equipment"),
    (18, "person"),
    (19, "bicycle"),
    (20, "boat"),
    (21, "railway"),
    (22, "farmland"),
];

pub fn default_class_table() -> BTreeMap<u16, String> {
    DEFAULT_CLASSES
        .iter()
        .map(|&(id, name)| (id, name.to_string()))
        .collect()
}

const DEFAULT_FUNCTIONS: [(&str, &[&str]); 23] = [
    ("open ground", &[
        "Unobstructed open ground that can serve as a temporary landing or staging area.",
        "Bare open terrain used for access, storage or future construction.",
    ]),
    ("road", &[
        "A paved road that carries vehicle traffic between destinations.",
        "A transportation corridor that vehicles use to move through the area.",
        "A roadway that guides traffic and connects buildings and parking areas.",
    ]),
    ("building", &[
        "A building that provides enclosed space for living, working or storage.",
        "A structure that shelters people and equipment from the weather.",
    ]),
    ("car", &[
        "A passenger car used for personal transportation.",
        "A small motor vehicle that carries a few people along roads.",
    ]),
    ("truck", &[
        "A truck used to haul cargo and goods.",
        "A heavy vehicle that transports freight between sites.",
    ]),
    ("bus", &[
        "A bus that carries many passengers along fixed routes.",
        "A large public transport vehicle for groups of people.",
    ]),
    ("tree", &[
        "A tree that provides shade and habitat and stabilizes the soil.",
        "Vegetation that cools the surroundings and blocks wind.",
        "A tall plant that can obstruct low-altitude flight paths.",
    ]),
    ("grass", &[
        "A grass area used for recreation and ground cover.",
        "Low vegetation that prevents erosion and absorbs rainwater.",
    ]),
    ("water", &[
        "A body of water used for drainage, recreation or navigation.",
        "Open water that stores runoff and supports aquatic life.",
    ]),
    ("bridge", &[
        "A bridge that lets traffic cross over water or another road.",
        "A raised structure connecting two sides of an obstacle.",
    ]),
    ("parking lot", &[
        "A parking lot where vehicles are left when not in use.",
        "A paved area reserved for stationary cars.",
    ]),
    ("sidewalk", &[
        "A sidewalk that lets pedestrians walk safely beside the road.",
        "A footpath separating people on foot from vehicle traffic.",
    ]),
    ("fence", &[
        "A fence that marks a boundary and restricts access.",
        "A barrier that keeps people or animals inside or outside an area.",
    ]),
    ("utility pole", &[
        "A utility pole that carries power or communication lines.",
        "A vertical post supporting overhead cables, a hazard for low flight.",
    ]),
    ("solar panel", &[
        "A solar panel that converts sunlight into electricity.",
        "A photovoltaic array generating power for nearby buildings.",
    ]),
    ("shipping container", &[
        "A shipping container used to store and move goods.",
        "A standardized steel box for freight transport and storage.",
    ]),
    ("crane", &[
        "A crane that lifts heavy materials at a construction site.",
        "Tall lifting equipment that moves loads vertically and horizontally.",
    ]),
    ("rooftop equipment", &[
        "Rooftop equipment such as ventilation or air-conditioning units.",
        "Mechanical units on a roof that regulate the building's climate.",
    ]),
    ("person", &[
        "A person walking or standing in the scene.",
        "A pedestrian whose presence makes the area unsafe for landing.",
    ]),
    ("bicycle", &[
        "A bicycle used for short-distance personal travel.",
        "A pedal-powered vehicle parked or ridden along paths.",
    ]),
    ("boat", &[
        "A boat used to travel or carry goods on water.",
        "A watercraft moored or moving on the water surface.",
    ]),
    ("railway", &[
        "A railway track that guides trains between stations.",
        "Rail infrastructure used for freight and passenger trains.",
    ]),
    ("farmland", &[
        "Farmland used to grow crops.",
        "Cultivated land producing food or fodder.",
        "Agricultural fields arranged in regular plots.",
    ]),
];

/// Class name → 2–3 functional descriptions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionTable(pub BTreeMap<String, Vec<String>>);

impl Default for FunctionTable {
    fn default() -> Self {
        Self(
            DEFAULT_FUNCTIONS
                .iter()
                .map(|(name, ds)| (name.to_string(), ds.iter().map(|d| d.to_string()).collect()))
                .collect(),
        )
    }
}

impl FunctionTable {
    pub fn descriptions(&self, class_name: &str) -> Option<&[String]> {
        self.0.get(class_name).map(Vec::as_slice).filter(|d| !d.is_empty())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskLevel {
    Low,
    Medium,
    High,
}

impl RiskLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
        }
    }
}

/// Classes considered landing hazards, with their risk level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HazardTable(pub BTreeMap<String, RiskLevel>);

impl Default for HazardTable {
    fn default() -> Self {
        use RiskLevel::*;
        let entries = [
            ("person", High),
            ("utility pole", High),
            ("crane", High),
            ("water", High),
            ("car", Medium),
            ("truck", Medium),
            ("bus", Medium),
            ("tree", Medium),
            ("fence", Medium),
            ("bicycle", Medium),
            ("boat", Medium),
            ("railway", Medium),
            ("rooftop equipment", Low),
            ("solar panel", Low),
            ("shipping container", Low),
        ];
        Self(entries.iter().map(|&(n, r)| (n.to_string(), r)).collect())
    }
}

impl HazardTable {
    pub fn risk(&self, class_name: &str) -> Option<RiskLevel> {
        self.0.get(class_name).copied()
    }
}
