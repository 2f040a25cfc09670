//! Models shipped with the library.

use crate::ast::EventSystem;
use crate::parser::parse_model_named;

/// The electrical system: three batteries, a switch and a clock.
pub const ELECTRICAL: &str = include_str!("../models/electrical.evb");

/// Expected rendering of the electrical system abstracted on `{Bat}`.
pub const ELECTRICAL_BAT: &str = include_str!("../models/electrical_bat.evb");

/// Test purposes for the `{Bat}` abstraction.
pub const TP_ELECTRICAL: &str = include_str!("../models/electrical.tp");

pub fn electrical() -> EventSystem {
    parse_model_named(ELECTRICAL, "electrical.evb").expect("bundled model parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::print::pretty_print;
    use crate::parser::parse_model;

    #[test]
    fn electrical_has_three_vars_and_four_events() {
        let m = electrical();
        assert_eq!(m.vars.keys().collect::<Vec<_>>(), ["H", "Sw", "Bat"]);
        assert_eq!(m.events.keys().collect::<Vec<_>>(), ["Tic", "Com", "Fail", "Rep"]);
    }

    #[test]
    fn electrical_round_trips() {
        let m = electrical();
        assert_eq!(parse_model(&pretty_print(&m)).unwrap(), m);
    }

    #[test]
    fn golden_abstraction_is_in_printer_layout() {
        let g = parse_model(ELECTRICAL_BAT).unwrap();
        assert_eq!(pretty_print(&g), ELECTRICAL_BAT);
    }
}
