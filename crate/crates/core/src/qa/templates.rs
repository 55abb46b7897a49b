use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::Task;

pub const MIN_TEMPLATES_PER_TASK: usize = 20;

const BOX: &[&str] = &[
    "Locate every {class} in this aerial image and give its bounding box.",
    "Draw bounding boxes around all instances of {class} visible from the drone.",
    "Where are the {class} objects? Provide their bounding boxes.",
    "Detect each {class} in the scene and output its box coordinates.",
    "Give the pixel bounding box of each {class} seen in this UAV view.",
    "Find all {class} regions and report their axis-aligned boxes.",
    "Mark the location of every {class} with a bounding box.",
    "From this top-down image, box every {class}.",
    "Identify the {class} instances and output bounding boxes for them.",
    "Output the bounding boxes that enclose each {class} in the picture.",
    "Please localize all {class} objects using bounding boxes.",
    "Which areas of the image contain {class}? Answer with bounding boxes.",
    "Provide tight bounding boxes for every visible {class}.",
    "Enclose each {class} in the drone image with a rectangle and give its coordinates.",
    "List the bounding boxes of all {class} in this aerial scene.",
    "Spot the {class} in the overhead view and return their boxes.",
    "Return [x1,y1,x2,y2] boxes for every {class} captured by the UAV camera.",
    "Detect and box the {class} objects in this image.",
    "Where exactly is each {class}? Give bounding boxes in pixel coordinates.",
    "Annotate every {class} with an axis-aligned bounding box.",
    "Show me the {class} in this scene by giving their bounding boxes.",
];

const COLOR: &[&str] = &[
    "What is the dominant color of {object}?",
    "Which color best describes {object}?",
    "From the drone view, what color is {object}?",
    "Identify the main color of {object}.",
    "What color does {object} appear to be in this aerial image?",
    "Choose the color that matches {object}.",
    "Looking down from the UAV, which color is {object}?",
    "Select the most accurate color for {object}.",
    "What is the primary color of {object} in the image?",
    "Determine the color of {object}.",
    "Which of the following colors describes {object}?",
    "Tell me the color of {object}.",
    "In this overhead image, {object} is mostly which color?",
    "Pick the dominant hue of {object}.",
    "What colour is {object}?",
    "Which color covers most of {object}?",
    "Based on its pixels, what color is {object}?",
    "Name the color of {object} as seen from above.",
    "What is the overall color of {object}?",
    "Classify the color of {object}.",
    "Which color option fits {object} best?",
];

const DISTANCE: &[&str] = &[
    "How far is {object} from the camera?",
    "Estimate the distance between the drone camera and {object}.",
    "What is the approximate depth of {object} from the UAV?",
    "How many meters away from the camera is {object}?",
    "Give the distance from the drone to {object}.",
    "Estimate how far {object} is from the sensor.",
    "What is the camera-to-object distance for {object}?",
    "How distant is {object} from the UAV camera, in meters?",
    "Approximately how far away is {object}?",
    "Measure the distance from the drone to {object}.",
    "What is the depth of {object} relative to the camera?",
    "Estimate the range to {object}.",
    "From the UAV's viewpoint, how far is {object}?",
    "How far does the drone need to travel to reach {object}?",
    "Report the distance of {object} from the camera in meters.",
    "What is the average depth of {object}?",
    "How much space separates the camera and {object}?",
    "Tell me the distance to {object}.",
    "Roughly how many meters lie between the camera and {object}?",
    "Estimate the camera distance to {object}.",
    "What distance separates the UAV from {object}?",
];

const HEIGHT: &[&str] = &[
    "Which is higher, {a} or {b}?",
    "Compare the heights of {a} and {b}. Which one is taller?",
    "Between {a} and {b}, which stands higher above the ground?",
    "Is {a} higher than {b}?",
    "Which object reaches a greater altitude: {a} or {b}?",
    "Determine which is taller, {a} or {b}.",
    "Of {a} and {b}, which has the higher top surface?",
    "Which one rises higher, {a} or {b}?",
    "Compare the altitude of {a} with that of {b}.",
    "Which is elevated more, {a} or {b}?",
    "Tell me whether {a} or {b} is higher.",
    "Looking at {a} and {b}, which is the taller object?",
    "Which object is closer to the drone in height: {a} or {b}?",
    "Rank {a} and {b} by height. Which comes first?",
    "Is {b} taller than {a}?",
    "Which has greater height above ground level, {a} or {b}?",
    "How do the heights of {a} and {b} compare?",
    "Identify the higher object between {a} and {b}.",
    "Which sits at a higher altitude, {a} or {b}?",
    "Of the two, {a} and {b}, which is taller?",
    "Would a drone flying low clip {a} or {b} first? Which is higher?",
];

const POINT: &[&str] = &[
    "Point to the {class} in this image.",
    "Give several pixel coordinates that lie on the {class}.",
    "Mark points on the {class}.",
    "Where is the {class}? Answer with points.",
    "Provide points located inside the {class}.",
    "Indicate the {class} by pointing at it.",
    "Select some pixels that belong to the {class}.",
    "Point out the location of the {class} from the drone view.",
    "Output coordinates of points on the {class}.",
    "Show where the {class} is by giving a few points.",
    "Which pixels belong to the {class}? Give points.",
    "Tap on the {class} in this aerial image.",
    "Give me points that fall on the {class}.",
    "Place points on the {class}.",
    "Locate the {class} using point coordinates.",
    "Identify points that are part of the {class}.",
    "Find the {class} and point to it.",
    "Return a set of points within the {class}.",
    "Indicate a few positions on the {class}.",
    "Mark the {class} with several points.",
    "Which locations correspond to the {class}? Answer with points.",
];

const REVERSE_POINT: &[&str] = &[
    "What object is located at pixel ({x}, {y})?",
    "Identify the object at <point>[[{x},{y}]]</point>.",
    "What is at coordinate ({x}, {y}) in this aerial image?",
    "Which category does the pixel ({x}, {y}) belong to?",
    "Name the object found at ({x}, {y}).",
    "What can be seen at position ({x}, {y})?",
    "Tell me what occupies the point ({x}, {y}).",
    "The point ({x}, {y}) lies on which object?",
    "What kind of object is at x={x}, y={y}?",
    "Classify the object under pixel ({x}, {y}).",
    "Which class is present at ({x}, {y})?",
    "What does the drone see at ({x}, {y})?",
    "Determine the object category at point ({x}, {y}).",
    "Look at ({x}, {y}). What is there?",
    "What is the object at coordinates ({x}, {y})?",
    "Recognize the object located at <point>[[{x},{y}]]</point>.",
    "What type of thing is at pixel location ({x}, {y})?",
    "Which object covers the pixel ({x}, {y})?",
    "Name the category of the region containing ({x}, {y}).",
    "At ({x}, {y}), what object appears?",
    "What is shown at the point ({x}, {y}) in this UAV image?",
];

const FREESPACE: &[&str] = &[
    "Point to open free space in this aerial image.",
    "Where is there unobstructed ground? Answer with points.",
    "Mark points in areas that are free of objects.",
    "Identify open areas where nothing is present.",
    "Give points located in empty, navigable space.",
    "Find free space suitable for a drone to descend and point to it.",
    "Which regions of the scene are open? Answer with points.",
    "Point out clear ground areas in the image.",
    "Provide coordinates of unoccupied space.",
    "Locate obstacle-free regions and mark points in them.",
    "Where could the drone safely hover low? Give points in free space.",
    "Select points in large empty regions.",
    "Indicate the open spaces visible from above.",
    "Output points that fall on free ground.",
    "Show the vacant areas in the scene with points.",
    "Where is the ground not covered by any object? Mark points.",
    "Point to spacious empty areas in this image.",
    "Find the open space and give several points within it.",
    "Identify clear areas without obstacles using points.",
    "Give coordinates in wide-open regions of the scene.",
    "Which parts of the image are free space? Answer with points.",
];

const RELATION: &[&str] = &[
    "Where is {object} relative to {subject}?",
    "In the image, in which direction is {object} from {subject}?",
    "Describe the position of {object} with respect to {subject}.",
    "Relative to {subject}, where does {object} lie?",
    "From the drone view, where is {object} located compared with {subject}?",
    "Which direction would you move from {subject} to reach {object}?",
    "What is the spatial relationship of {object} to {subject}?",
    "How is {object} positioned relative to {subject}?",
    "Starting at {subject}, where do you find {object}?",
    "In image coordinates, {object} is in which direction from {subject}?",
    "Choose the direction of {object} as seen from {subject}.",
    "Where does {object} sit in relation to {subject}?",
    "Looking at {subject}, which way is {object}?",
    "Determine the relative position of {object} with respect to {subject}.",
    "Is {object} above, below, left or right of {subject}?",
    "Which side of {subject} is {object} on?",
    "Relative placement: where is {object} compared to {subject}?",
    "Select the direction from {subject} towards {object}.",
    "What direction points from {subject} to {object}?",
    "Locate {object} relative to {subject} in the image.",
    "Taking {subject} as reference, where is {object}?",
];

const CAPTION_SINGLE: &[&str] = &[
    "Describe this aerial image in detail.",
    "Write a caption for this drone image.",
    "What does this UAV view show?",
    "Summarize the scene captured from above.",
    "Give a detailed description of the scene composition.",
    "Describe the layout of objects in this overhead image.",
    "Provide a caption that covers the objects and their arrangement.",
    "Explain what is visible in this bird's-eye view.",
    "Describe the environment shown in this aerial photo.",
    "What is happening in this drone image? Describe it.",
    "Caption this top-down scene.",
    "Give an overview of the objects and their spatial distribution.",
    "Describe the scene as observed by the UAV.",
    "Write a paragraph describing this aerial view.",
    "Summarize the main elements of this image.",
    "Describe what a drone pilot would see here.",
    "Provide a rich description of this overhead scene.",
    "What kind of place is this? Describe the scene.",
    "Describe the land use and objects visible from above.",
    "Characterize this aerial scene in a few sentences.",
    "Give a descriptive caption for this UAV capture.",
];

const CAPTION_MULTI: &[&str] = &[
    "Describe how the scene changes across these {n} aerial images.",
    "Write a caption covering this sequence of {n} drone frames.",
    "Summarize what the UAV observes over these {n} consecutive images.",
    "Describe the scene and its variations across the {n} frames.",
    "What changes between these {n} aerial views?",
    "Give a combined description of these {n} drone images.",
    "Caption this sequence of {n} overhead frames.",
    "Describe the objects and how their layout evolves over {n} images.",
    "Summarize the flight footage in these {n} frames.",
    "Explain what is visible across these {n} UAV images.",
    "Write a description of the area covered by these {n} frames.",
    "Describe the spatial variations seen in this {n}-image sequence.",
    "Provide a caption for the {n} consecutive aerial views.",
    "What does the drone see as it moves through these {n} frames?",
    "Describe this image sequence of {n} frames from above.",
    "Summarize the environment across the {n} drone captures.",
    "Give an overview of the scene shown in these {n} images.",
    "Describe the composition of the scene across {n} frames.",
    "What is common and what differs across these {n} aerial images?",
    "Write a caption that spans all {n} frames.",
    "Characterize the area observed over {n} UAV frames.",
];

const COUNTING: &[&str] = &[
    "How many {class} are there in this image?",
    "Count the {class} visible from the drone.",
    "What is the number of {class} in the scene?",
    "How many {class} can you see?",
    "Count every {class} in this aerial view.",
    "How many separate {class} appear in the image?",
    "Give the total count of {class}.",
    "From above, how many {class} are visible?",
    "Determine the number of {class} instances.",
    "How many distinct {class} regions are present?",
    "Tell me how many {class} the UAV captured.",
    "What count of {class} does this image contain?",
    "Number of {class} in the picture?",
    "How many individual {class} are shown?",
    "Count the {class} objects in this scene.",
    "How many {class} does the overhead image show?",
    "What is the total number of {class} visible?",
    "Please count the {class}.",
    "In this drone image, how many {class} exist?",
    "How many {class} instances can be identified?",
    "Select the number of {class} present in the image.",
];

const FUNCTION: &[&str] = &[
    "What is the function of the object at ({x}, {y})?",
    "What is the object at pixel ({x}, {y}) used for?",
    "Describe the purpose of the object located at ({x}, {y}).",
    "What role does the object at <point>[[{x},{y}]]</point> play?",
    "What is the thing at ({x}, {y}) for?",
    "Explain the use of the object at coordinate ({x}, {y}).",
    "What purpose does the object at ({x}, {y}) serve?",
    "Why is the object at ({x}, {y}) there? Describe its function.",
    "What does the object at position ({x}, {y}) do?",
    "Describe the functionality of whatever is at ({x}, {y}).",
    "What is the object at ({x}, {y}) designed for?",
    "Tell me the function of the item at ({x}, {y}).",
    "How is the object at ({x}, {y}) typically used?",
    "State the purpose of the object under pixel ({x}, {y}).",
    "What is the practical role of the object at ({x}, {y})?",
    "From the drone's perspective, what function does the object at ({x}, {y}) have?",
    "What job does the object at <point>[[{x},{y}]]</point> perform?",
    "Explain what the object at ({x}, {y}) is for.",
    "Identify the function of the structure at ({x}, {y}).",
    "What service does the object at ({x}, {y}) provide?",
    "Describe how the object at ({x}, {y}) is used in this scene.",
];

const LANDING: &[&str] = &[
    "Is it safe for the drone to land in this area? Give a structured assessment.",
    "Assess the landing safety of this scene.",
    "Can the UAV land here? Classify as safe, cautious or unsafe and explain.",
    "Evaluate whether this location is suitable for landing.",
    "Provide a landing safety analysis for this aerial view.",
    "Determine the landing feasibility of this scene and list hazards.",
    "Should the drone attempt to land here? Assess the risks.",
    "Give a structured landing assessment with confidence and hazards.",
    "Analyze this area for a safe drone landing.",
    "Rate the landing safety (safe/cautious/unsafe) for this scene.",
    "Where could the drone land, and how safe is it?",
    "Identify a landing zone and assess its safety.",
    "Is this scene suitable for an emergency landing? Explain.",
    "Evaluate landing hazards and recommend a landing area.",
    "Perform a landing risk assessment for this image.",
    "Assess whether the UAV can descend safely here.",
    "What is the landing feasibility of this area? Include confidence.",
    "Judge the safety of landing in this scene and justify it.",
    "Provide feasibility, confidence, region, hazards and reasoning for landing here.",
    "Check this area for landing: is it safe, cautious or unsafe?",
    "Analyze potential hazards and decide if landing is safe.",
];

/// Per-task question templates with `{slot}` placeholders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateBank {
    templates: BTreeMap<Task, Vec<String>>,
}

impl Default for TemplateBank {
    fn default() -> Self {
        let templates = Task::ALL
            .into_iter()
            .map(|t| (t, Self::builtin(t).iter().map(|s| String::from(*s)).collect()))
            .collect();
        Self { templates }
    }
}

impl TemplateBank {
    fn builtin(task: Task) -> &'static [&'static str] {
        match task {
            Task::Box => BOX,
            Task::Color => COLOR,
            Task::Distance => DISTANCE,
            Task::Height => HEIGHT,
            Task::Point => POINT,
            Task::ReversePoint => REVERSE_POINT,
            Task::Freespace => FREESPACE,
            Task::Relation => RELATION,
            Task::CaptionSingle => CAPTION_SINGLE,
            Task::CaptionMulti => CAPTION_MULTI,
            Task::Counting => COUNTING,
            Task::Function => FUNCTION,
            Task::Landing => LANDING,
        }
    }

    /// Slots every template of `task` must fill.
    pub fn required_slots(task: Task) -> &'static [&'static str] {
        match task {
            Task::Box | Task::Point | Task::Counting => &["class"],
            Task::Color | Task::Distance => &["object"],
            Task::Height => &["a", "b"],
            Task::ReversePoint | Task::Function => &["x", "y"],
            Task::Relation => &["object", "subject"],
            Task::CaptionMulti => &["n"],
            Task::Freespace | Task::CaptionSingle | Task::Landing => &[],
        }
    }

    pub fn len(&self, task: Task) -> usize {
        self.templates.get(&task).map_or(0, Vec::len)
    }

    pub fn is_empty(&self, task: Task) -> bool {
        self.len(task) == 0
    }

    pub fn template(&self, task: Task, id: usize) -> &str {
        let list = &self.templates[&task];
        &list[id % list.len()]
    }

    /// Renders template `id` (modulo bank size) with the given slots.
    pub fn render(&self, task: Task, id: usize, slots: &BTreeMap<String, String>) -> String {
        fill(self.template(task, id), slots)
    }
}

fn fill(template: &str, slots: &BTreeMap<String, String>) -> String {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let key = &after[..close];
                match slots.get(key) {
                    Some(v) => out.push_str(v),
                    None => {
                        out.push('{');
                        out.push_str(key);
                        out.push('}');
                    }
                }
                rest = &after[close + 1..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}
