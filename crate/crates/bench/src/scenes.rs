//! The shipped scene corpus.

pub struct Scene {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! scene {
    ($name:literal) => {
        Scene {
            name: $name,
            text: include_str!(concat!("../scenes/", $name, ".bench")),
        }
    };
}

pub const SCENES: &[Scene] = &[
    scene!("walborn_fig1"),
    scene!("walborn_fig2"),
    scene!("walborn_fig3_plus45"),
    scene!("walborn_fig3_minus45"),
    scene!("walborn_fig4"),
    scene!("menzel_nearfield"),
    scene!("menzel_farfield"),
    scene!("menzel_oneslit"),
];

/// Looks a scene up by name, with or without the `.bench` suffix.
pub fn find(name: &str) -> Option<&'static Scene> {
    let name = name.strip_suffix(".bench").unwrap_or(name);
    SCENES.iter().find(|s| s.name == name)
}
