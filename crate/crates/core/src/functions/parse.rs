//! Recursive-descent parser for the function mini-language.
//!
//! ```text
//! spec  := radial(profile=log|sqrtlog, c=REAL)
//!        | loglinear(A=[[REAL,...],...])
//!        | monomial_ideal(m=[[REAL,...],...], w=[REAL,...])
//!        | lse_toric(a=[REAL,...], beta=REAL)
//!        | sqrt_compose(spec)
//!        | scale(REAL, spec)
//!        | smooth_poly(terms=[(REAL, [INT,...], [INT,...]), ...])
//! ```

use super::{FunctionSpec, PolyTerm, Profile};
use crate::{Error, Result};

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        offset,
        message: message.into(),
    })
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(d) if d == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(d) => err(self.pos, format!("expected `{c}`, found `{d}`")),
            None => err(self.pos, format!("expected `{c}`, found end of input")),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return err(start, "expected an identifier");
        }
        self.pos += len;
        Ok((start, &self.src[start..start + len]))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E')))
            .unwrap_or(self.rest().len());
        let text = &self.src[start..start + len];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos += len;
                Ok(v)
            }
            _ => err(
                start,
                format!(
                    "expected a finite number, found `{}`",
                    if text.is_empty() { self.rest() } else { text }
                ),
            ),
        }
    }

    fn list(&mut self) -> Result<Vec<f64>> {
        self.expect('[')?;
        let mut out = Vec::new();
        if self.eat(']') {
            return Ok(out);
        }
        loop {
            out.push(self.number()?);
            if self.eat(']') {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }

    fn matrix(&mut self) -> Result<Vec<Vec<f64>>> {
        self.expect('[')?;
        let mut rows = Vec::new();
        loop {
            let at = self.pos;
            let row = self.list()?;
            if let Some(first) = rows.first().map(|r: &Vec<f64>| r.len()) {
                if row.len() != first {
                    return err(
                        at,
                        format!("row has {} entries, expected {first}", row.len()),
                    );
                }
            }
            if row.is_empty() {
                return err(at, "empty row");
            }
            rows.push(row);
            if self.eat(']') {
                return Ok(rows);
            }
            self.expect(',')?;
        }
    }

    fn key(&mut self, want: &str) -> Result<()> {
        let (at, k) = self.ident()?;
        if k != want {
            return err(at, format!("expected argument `{want}`, found `{k}`"));
        }
        self.expect('=')
    }

    fn spec(&mut self) -> Result<FunctionSpec> {
        let (at, name) = self.ident()?;
        self.expect('(')?;
        let spec = match name {
            "radial" => self.radial()?,
            "loglinear" => {
                self.key("A")?;
                let m_at = self.pos;
                let a = self.matrix()?;
                check_invertible(&a, m_at)?;
                FunctionSpec::LogLinear { a }
            }
            "monomial_ideal" => {
                self.key("m")?;
                let m_at = self.pos;
                let m = self.matrix()?;
                self.expect(',')?;
                self.key("w")?;
                let w_at = self.pos;
                let w = self.list()?;
                check_monomials(&m, &w, m_at, w_at)?;
                FunctionSpec::MonomialIdeal { m, w }
            }
            "lse_toric" => {
                self.key("a")?;
                let a_at = self.pos;
                let a = self.list()?;
                self.expect(',')?;
                self.key("beta")?;
                let b_at = self.pos;
                let beta = self.number()?;
                if !(beta > 0.0) {
                    return err(b_at, "beta must be positive");
                }
                if a.len() < 2 || a.iter().any(|x| !(beta * x >= 1.0)) {
                    return err(a_at, "need at least two weights with beta·a_j ≥ 1");
                }
                FunctionSpec::LseToric { a, beta }
            }
            "sqrt_compose" => FunctionSpec::SqrtCompose(Box::new(self.spec()?)),
            "scale" => {
                let save = self.pos;
                if let Ok((_, "c")) = self.ident() {
                    self.expect('=')?;
                } else {
                    self.pos = save;
                }
                let c = self.number()?;
                self.expect(',')?;
                FunctionSpec::Scale {
                    c,
                    inner: Box::new(self.spec()?),
                }
            }
            "smooth_poly" => self.smooth_poly()?,
            other => return err(at, format!("unknown constructor `{other}`")),
        };
        self.expect(')')?;
        Ok(spec)
    }

    fn radial(&mut self) -> Result<FunctionSpec> {
        let (mut profile, mut c) = (None, None);
        loop {
            let (at, k) = self.ident()?;
            self.expect('=')?;
            match k {
                "profile" => {
                    let (pat, p) = self.ident()?;
                    profile = Some(match p {
                        "log" => Profile::Log,
                        "sqrtlog" => Profile::SqrtLog,
                        _ => return err(pat, format!("unknown profile `{p}`")),
                    });
                }
                "c" => c = Some(self.number()?),
                _ => return err(at, format!("unknown argument `{k}`")),
            }
            if self.peek() == Some(')') {
                break;
            }
            self.expect(',')?;
        }
        match (profile, c) {
            (Some(profile), Some(c)) => Ok(FunctionSpec::Radial { profile, c }),
            _ => err(self.pos, "radial needs `profile` and `c`"),
        }
    }

    fn smooth_poly(&mut self) -> Result<FunctionSpec> {
        self.key("terms")?;
        self.expect('[')?;
        let mut terms: Vec<PolyTerm> = Vec::new();
        loop {
            let at = self.pos;
            self.expect('(')?;
            let coeff = self.number()?;
            self.expect(',')?;
            let z = self.list()?;
            self.expect(',')?;
            let zb = self.list()?;
            self.expect(')')?;
            let to_int = |v: &[f64]| -> Result<Vec<u32>> {
                v.iter()
                    .map(|&x| {
                        if x >= 0.0 && x.fract() == 0.0 && x < 64.0 {
                            Ok(x as u32)
                        } else {
                            err(
                                at,
                                format!("exponent `{x}` is not a small nonnegative integer"),
                            )
                        }
                    })
                    .collect()
            };
            let term = PolyTerm {
                coeff,
                z_exp: to_int(&z)?,
                zbar_exp: to_int(&zb)?,
            };
            let d = terms
                .first()
                .map(|t| t.z_exp.len())
                .unwrap_or(term.z_exp.len());
            if term.z_exp.len() != d || term.zbar_exp.len() != d || d < 2 {
                return err(at, "exponent vectors must share one length n+1 ≥ 2");
            }
            terms.push(term);
            if self.eat(']') {
                break;
            }
            self.expect(',')?;
        }
        Ok(FunctionSpec::SmoothPoly { terms })
    }
}

fn check_invertible(a: &[Vec<f64>], at: usize) -> Result<()> {
    let d = a.len();
    if d < 2 || a.iter().any(|r| r.len() != d) {
        return err(at, "A must be square of size n+1 ≥ 2");
    }
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| a[i][j]);
    let scale = m.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    if m.determinant().abs() <= 1e-12 * scale.powi(d as i32) {
        return err(at, "A is singular");
    }
    Ok(())
}

fn check_monomials(m: &[Vec<f64>], w: &[f64], m_at: usize, w_at: usize) -> Result<()> {
    let d = m[0].len();
    if d < 2 {
        return err(m_at, "monomials need n+1 ≥ 2 exponents");
    }
    if m.iter().flatten().any(|&e| !(e == 0.0 || e >= 1.0)) {
        return err(m_at, "exponents must be 0 or at least 1");
    }
    for j in 0..d {
        let pure = m
            .iter()
            .any(|r| r[j] > 0.0 && r.iter().enumerate().all(|(k, &e)| k == j || e == 0.0));
        if !pure {
            return err(
                m_at,
                format!("no pure power of z^{j}; the function would be singular off the origin"),
            );
        }
    }
    if w.len() != m.len() || w.iter().any(|&x| !(x > 0.0)) {
        return err(w_at, "need one positive weight per monomial");
    }
    Ok(())
}

/// Parses a function spec; errors carry the byte offset of the problem.
pub fn parse_spec(text: &str) -> Result<FunctionSpec> {
    let mut p = Parser { src: text, pos: 0 };
    let spec = p.spec()?;
    if p.peek().is_some() {
        return err(p.pos, "trailing input");
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_examples() {
        assert_eq!(
            parse_spec("radial(profile=log,c=2)").unwrap(),
            FunctionSpec::Radial {
                profile: Profile::Log,
                c: 2.0
            }
        );
        let m = parse_spec("monomial_ideal(m=[[1,0],[0,2]],w=[1,1])").unwrap();
        assert_eq!(
            m,
            FunctionSpec::MonomialIdeal {
                m: vec![vec![1.0, 0.0], vec![0.0, 2.0]],
                w: vec![1.0, 1.0]
            }
        );
        assert!(matches!(
            parse_spec("loglinear(A=[[1,1],[0,1]])").unwrap(),
            FunctionSpec::LogLinear { .. }
        ));
        let s = parse_spec(" scale( 0.5 , sqrt_compose(radial(c=1, profile=log)) ) ").unwrap();
        assert_eq!(
            s.to_string(),
            "scale(0.5,sqrt_compose(radial(profile=log,c=1)))"
        );
        let p = parse_spec("smooth_poly(terms=[(1,[1,0],[1,0]),(1,[2,1],[0,1])])").unwrap();
        assert!(!p.is_s1_invariant());
    }

    #[test]
    fn reports_offsets() {
        assert_eq!(
            parse_spec("radial(profile=lag,c=1)"),
            Err(Error::Parse {
                offset: 15,
                message: "unknown profile `lag`".into()
            })
        );
        assert!(matches!(
            parse_spec("loglinear(A=[[1,1],[1,1]])"),
            Err(Error::Parse { offset: 12, .. })
        ));
        assert!(matches!(
            parse_spec("monomial_ideal(m=[[1,1]],w=[1])"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_spec("radial(profile=log,c=1) x"),
            Err(Error::Parse { offset: 24, .. })
        ));
        assert!(matches!(
            parse_spec("nope(1)"),
            Err(Error::Parse { offset: 0, .. })
        ));
    }
}
