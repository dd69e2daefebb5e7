//! Euclidean board extension.

use crate::error::{Error, Result};
use crate::rulesheet::RuleSheet;
use crate::term::Term;

pub const EXTENSION_RELATIONS: [&str; 6] = [
    "boardboundaries",
    "boardfunctor",
    "boardrelation",
    "boardpattern",
    "playfunctor",
    "playpattern",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternToken {
    Piece,
    Dim,
    Skip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoardSpec {
    pub d_min: f64,
    pub d_max: f64,
    pub board_functor: String,
    pub board_pattern: Vec<PatternToken>,
    pub play_functor: String,
    pub play_pattern: Vec<PatternToken>,
    pub n_dims: usize,
}

pub type Piece = (String, Vec<f64>);

/// Optional sign, digits, optional fraction.
pub fn parse_real(s: &str) -> Option<f64> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |x: &str| !x.is_empty() && x.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || frac.is_some_and(|f| !digits(f)) {
        return None;
    }
    s.parse().ok()
}

fn pattern(t: &Term) -> Result<Vec<PatternToken>> {
    t.args()
        .iter()
        .map(|a| match a {
            Term::Const(c) if c == "piece" => Ok(PatternToken::Piece),
            Term::Const(c) if c == "dim" => Ok(PatternToken::Dim),
            Term::Const(c) if c == "skip" => Ok(PatternToken::Skip),
            _ => Err(Error::Board(format!("bad pattern symbol {a} in {t}"))),
        })
        .collect()
}

fn single_symbol(t: &Term) -> Result<String> {
    match t.args() {
        [Term::Const(c)] => Ok(c.clone()),
        _ => Err(Error::Board(format!("{t} must name one functor"))),
    }
}

pub fn parse_board_extension(sheet: &RuleSheet) -> Result<Option<BoardSpec>> {
    if sheet.extension.is_empty() {
        return Ok(None);
    }
    let mut bounds = None;
    let mut bf = None;
    let mut bp = None;
    let mut pf = None;
    let mut pp = None;
    for t in &sheet.extension {
        if !t.is_ground() {
            return Err(Error::Board(format!("{t} is not ground")));
        }
        let slot = match t.functor().unwrap_or("") {
            "boardboundaries" => {
                let [a, b] = t.args() else {
                    return Err(Error::Board(format!("{t} needs two numbers")));
                };
                let num = |x: &Term| match x {
                    Term::Const(c) => parse_real(c),
                    _ => None,
                };
                let (Some(lo), Some(hi)) = (num(a), num(b)) else {
                    return Err(Error::Board(format!("{t} has non-numeric bounds")));
                };
                if lo > hi {
                    return Err(Error::Board(format!("d_min {lo} > d_max {hi}")));
                }
                bounds.replace((lo, hi)).is_some()
            }
            "boardfunctor" | "boardrelation" => bf.replace(single_symbol(t)?).is_some(),
            "boardpattern" => bp.replace(pattern(t)?).is_some(),
            "playfunctor" => pf.replace(single_symbol(t)?).is_some(),
            "playpattern" => pp.replace(pattern(t)?).is_some(),
            _ => unreachable!(),
        };
        if slot {
            return Err(Error::Board(format!("{t} given more than once")));
        }
    }
    let (Some((d_min, d_max)), Some(bf), Some(bp), Some(pf), Some(pp)) = (bounds, bf, bp, pf, pp)
    else {
        return Err(Error::Board(
            "incomplete extension; required: boardboundaries, boardfunctor (or boardrelation), boardpattern, playfunctor, playpattern".into(),
        ));
    };
    let count = |p: &[PatternToken], k| p.iter().filter(|&&x| x == k).count();
    let n_dims = count(&bp, PatternToken::Dim);
    if count(&bp, PatternToken::Piece) != 1 || n_dims == 0 {
        return Err(Error::Board(
            "boardpattern needs one piece and at least one dim".into(),
        ));
    }
    if count(&pp, PatternToken::Piece) != 1 || count(&pp, PatternToken::Dim) != n_dims {
        return Err(Error::Board(format!(
            "playpattern needs one piece and {n_dims} dim entries"
        )));
    }
    for f in [&bf, &pf] {
        if !sheet_mentions(sheet, f) {
            return Err(Error::Board(format!("{f} does not appear in the rules")));
        }
    }
    Ok(Some(BoardSpec {
        d_min,
        d_max,
        board_functor: bf,
        board_pattern: bp,
        play_functor: pf,
        play_pattern: pp,
        n_dims,
    }))
}

fn sheet_mentions(sheet: &RuleSheet, f: &str) -> bool {
    sheet.static_facts.iter().any(|t| t.mentions(f))
        || sheet.init_facts.iter().any(|t| t.mentions(f))
        || sheet.rules.iter().any(|r| {
            r.head.mentions(f) || r.body.iter().any(|l| l.mentions(f))
        })
}

fn apply_pattern(p: &[PatternToken], t: &Term) -> Result<Piece> {
    let mut piece = String::new();
    let mut coords = Vec::new();
    for (tok, a) in p.iter().zip(t.args()) {
        match tok {
            PatternToken::Piece => piece = a.to_string(),
            PatternToken::Dim => {
                let v = match a {
                    Term::Const(c) => parse_real(c),
                    _ => None,
                };
                coords.push(v.ok_or_else(|| {
                    Error::Board(format!("non-numeric coordinate {a} in {t}"))
                })?);
            }
            PatternToken::Skip => {}
        }
    }
    Ok((piece, coords))
}

pub fn extract_move_coords(spec: &BoardSpec, mv: &Term) -> Result<Option<Piece>> {
    if mv.key() != Some((&spec.play_functor, spec.play_pattern.len())) {
        return Ok(None);
    }
    apply_pattern(&spec.play_pattern, mv).map(Some)
}

/// Ordered by coordinates, then piece.
pub fn extract_board_pieces(spec: &BoardSpec, state: &[Term]) -> Result<Vec<Piece>> {
    let mut out = Vec::new();
    for t in state {
        if t.key() == Some((&spec.board_functor, spec.board_pattern.len())) {
            out.push(apply_pattern(&spec.board_pattern, t)?);
        }
    }
    out.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulesheet::parse_kif;
    use crate::term::parse_term;

    const EXT: &str = "(boardboundaries 1 8) (boardfunctor mark) (boardpattern dim dim piece) \
        (playfunctor play) (playpattern piece skip skip dim dim)";
    const USES: &str = "(role a) (init (mark 1 1 x)) (<= (legal a (play x p q 1 1)) (true (mark 1 1 x)))";

    #[test]
    fn figure_extension() {
        let s = parse_kif(&format!("{EXT} {USES}")).unwrap();
        let b = s.board.unwrap();
        assert_eq!((b.d_min, b.d_max, b.n_dims), (1.0, 8.0, 2));
        assert_eq!(b.board_functor, "mark");
    }

    #[test]
    fn absent_and_reversed() {
        assert!(parse_kif(USES).unwrap().board.is_none());
        let bad = EXT.replace("1 8", "8 1");
        assert!(matches!(
            parse_kif(&format!("{bad} {USES}")),
            Err(Error::Board(_))
        ));
    }

    #[test]
    fn malformed_extensions() {
        let cases = [
            EXT.replace("dim dim piece", "dim dim pawn"),
            EXT.replace("(playfunctor play)", ""),
            EXT.replace("playfunctor play", "playfunctor zzz"),
            EXT.replace("piece skip skip dim dim", "piece skip skip dim"),
        ];
        for c in cases {
            assert!(parse_kif(&format!("{c} {USES}")).is_err(), "{c}");
        }
        assert!(parse_kif(&format!("{} {USES}", EXT.replace("boardfunctor", "boardrelation"))).is_ok());
    }

    fn spec(play: Vec<PatternToken>) -> BoardSpec {
        use PatternToken::*;
        BoardSpec {
            d_min: 1.0,
            d_max: 8.0,
            board_functor: "cell".into(),
            board_pattern: vec![Dim, Dim, Piece],
            play_functor: "play".into(),
            play_pattern: play,
            n_dims: 2,
        }
    }

    #[test]
    fn move_coords() {
        use PatternToken::*;
        let s = spec(vec![Piece, Skip, Skip, Dim, Dim]);
        let m = parse_term("(play x a b 1 3)").unwrap();
        assert_eq!(
            extract_move_coords(&s, &m).unwrap(),
            Some(("x".into(), vec![1.0, 3.0]))
        );
        assert_eq!(extract_move_coords(&s, &parse_term("noop").unwrap()).unwrap(), None);
        let s = spec(vec![Piece, Dim, Dim]);
        assert!(extract_move_coords(&s, &parse_term("(play x one 3)").unwrap()).is_err());
    }

    #[test]
    fn board_pieces() {
        use PatternToken::*;
        let s = spec(vec![Piece, Dim, Dim]);
        let st: Vec<Term> = ["(cell 4 5 red)", "(cell 4 4 black)", "(control black)"]
            .iter()
            .map(|t| parse_term(t).unwrap())
            .collect();
        assert_eq!(
            extract_board_pieces(&s, &st).unwrap(),
            vec![
                ("black".into(), vec![4.0, 4.0]),
                ("red".into(), vec![4.0, 5.0])
            ]
        );
        assert!(extract_board_pieces(&s, &[]).unwrap().is_empty());
    }

    #[test]
    fn reals() {
        assert_eq!(parse_real("-2.5"), Some(-2.5));
        assert_eq!(parse_real("+3"), Some(3.0));
        for s in ["1e3", ".5", "5.", "one", "", "-"] {
            assert_eq!(parse_real(s), None, "{s}");
        }
    }
}
