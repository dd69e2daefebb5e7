//! Bundled rule sheets.

pub const TICTACTOE: &str = include_str!("../games/tictactoe.kif");
pub const TICTACTOE_EXT: &str = include_str!("../games/tictactoe.ext.kif");
pub const NIM: &str = include_str!("../games/nim.kif");
pub const CONNECTFOUR: &str = include_str!("../games/connectfour.kif");
pub const CONNECTFOUR_EXT: &str = include_str!("../games/connectfour.ext.kif");

pub const ALL: [(&str, &str); 5] = [
    ("tictactoe", TICTACTOE),
    ("tictactoe.ext", TICTACTOE_EXT),
    ("nim", NIM),
    ("connectfour", CONNECTFOUR),
    ("connectfour.ext", CONNECTFOUR_EXT),
];

pub fn by_name(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
