//! Line-oriented Hamiltonian text format.
//!
//! ```text
//! # unit: hartree
//! qubits 4
//! -0.0971 I
//! 0.1714 Z0
//! 0.1687 Z0 Z1
//! -0.0453 X0 X1 Y2 Y3
//! ```
//!
//! `#` starts a comment, blank lines are ignored, and the first content
//! line must be the `qubits <n>` header.

use super::{HamiltonianError, PauliAxis, PauliHamiltonian, PauliOperator, PauliTerm};

pub fn parse_hamiltonian(text: &str) -> Result<PauliHamiltonian, HamiltonianError> {
    let mut n_qubits: Option<usize> = None;
    let mut terms = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let first = tokens.next().expect("non-empty line has a token");

        let Some(n) = n_qubits else {
            if first != "qubits" {
                return Err(HamiltonianError::MissingHeader);
            }
            let value = tokens.next().ok_or_else(|| malformed(line, "expected `qubits <n>`"))?;
            if tokens.next().is_some() {
                return Err(malformed(line, "trailing tokens after qubit count"));
            }
            let n: usize = value
                .parse()
                .map_err(|_| malformed(line, format!("invalid qubit count `{value}`")))?;
            if n == 0 {
                return Err(at_line(line, HamiltonianError::NoQubits));
            }
            n_qubits = Some(n);
            continue;
        };

        if first == "qubits" {
            return Err(malformed(line, "duplicate `qubits` header"));
        }
        let coefficient: f64 = first
            .parse()
            .map_err(|_| malformed(line, format!("invalid coefficient `{first}`")))?;

        let mut ops = Vec::new();
        for tok in tokens {
            ops.push(parse_operator(tok).map_err(|m| malformed(line, m))?);
        }
        if ops.is_empty() {
            return Err(malformed(line, "term has no operators (write `I` for identity)"));
        }
        if let Some(op) = ops.iter().find(|op| op.qubit >= n) {
            return Err(at_line(
                line,
                HamiltonianError::QubitOutOfRange {
                    qubit: op.qubit,
                    n_qubits: n,
                },
            ));
        }
        let term = PauliTerm::new(coefficient, ops).map_err(|e| at_line(line, e))?;
        let count = term.y_count();
        if count % 2 == 1 {
            return Err(at_line(
                line,
                HamiltonianError::OddYCount {
                    term: term.to_string(),
                    count,
                },
            ));
        }
        terms.push(term);
    }

    let n = n_qubits.ok_or(HamiltonianError::MissingHeader)?;
    PauliHamiltonian::new(n, terms)
}

/// `X3`, `Y0`, `Z12`, bare `I`, or `I<k>` (identity on one qubit, dropped).
fn parse_operator(tok: &str) -> Result<PauliOperator, String> {
    let mut chars = tok.chars();
    let axis = match chars.next() {
        Some('X') => PauliAxis::X,
        Some('Y') => PauliAxis::Y,
        Some('Z') => PauliAxis::Z,
        Some('I') => PauliAxis::I,
        _ => return Err(format!("unknown operator `{tok}`")),
    };
    let index = chars.as_str();
    if index.is_empty() {
        return if axis == PauliAxis::I {
            Ok(PauliOperator::new(PauliAxis::I, 0))
        } else {
            Err(format!("operator `{tok}` is missing a qubit index"))
        };
    }
    let qubit = index
        .parse()
        .map_err(|_| format!("invalid qubit index in `{tok}`"))?;
    Ok(PauliOperator::new(axis, qubit))
}

fn malformed(line: usize, message: impl Into<String>) -> HamiltonianError {
    HamiltonianError::Malformed {
        line,
        message: message.into(),
    }
}

fn at_line(line: usize, source: HamiltonianError) -> HamiltonianError {
    HamiltonianError::AtLine {
        line,
        source: Box::new(source),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::SpinConfiguration;
    use proptest::prelude::*;

    #[test]
    fn single_zz_term() {
        let h = parse_hamiltonian("qubits 2\n1.0 Z0 Z1").unwrap();
        assert_eq!(h.n_qubits(), 2);
        assert_eq!(h.terms().len(), 1);
        assert_eq!(h.terms()[0].coefficient(), 1.0);
        assert_eq!(
            h.terms()[0].operators(),
            &[PauliOperator::z(0), PauliOperator::z(1)]
        );
    }

    #[test]
    fn identity_term() {
        let h = parse_hamiltonian("qubits 1\n0.5 I").unwrap();
        assert!(h.terms()[0].is_identity());
        for x in SpinConfiguration::enumerate(1) {
            assert_eq!(h.connected_configurations(&x), vec![(x, 0.5)]);
        }
    }

    #[test]
    fn odd_y_is_rejected_with_line() {
        let err = parse_hamiltonian("qubits 2\n0.25 Y0 X1").unwrap_err();
        match err {
            HamiltonianError::AtLine { line, source } => {
                assert_eq!(line, 2);
                assert!(matches!(*source, HamiltonianError::OddYCount { count: 1, .. }));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# unit: hartree\n\nqubits 2 # header\n\n0.1686 Z0 Z1 # coupling\n-0.5 I\n";
        let h = parse_hamiltonian(text).unwrap();
        assert_eq!(h.terms().len(), 2);
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let cases = [
            ("qubits 2\nabc Z0", 2),
            ("qubits 2\n1.0 Q0", 2),
            ("qubits 2\n1.0 Z", 2),
            ("qubits 2\n\n1.0", 3),
            ("qubits x", 1),
            ("qubits 2\nqubits 3", 2),
        ];
        for (text, want) in cases {
            match parse_hamiltonian(text).unwrap_err() {
                HamiltonianError::Malformed { line, .. } => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn duplicate_and_range_errors() {
        let err = parse_hamiltonian("qubits 2\n1.0 Z0 X0").unwrap_err();
        assert!(matches!(err, HamiltonianError::AtLine { line: 2, ref source }
            if matches!(**source, HamiltonianError::DuplicateQubit { qubit: 0 })));
        let err = parse_hamiltonian("qubits 2\n1.0 Z2").unwrap_err();
        assert!(matches!(err, HamiltonianError::AtLine { line: 2, ref source }
            if matches!(**source, HamiltonianError::QubitOutOfRange { qubit: 2, n_qubits: 2 })));
    }

    #[test]
    fn missing_header() {
        assert_eq!(
            parse_hamiltonian("1.0 Z0").unwrap_err(),
            HamiltonianError::MissingHeader
        );
        assert_eq!(
            parse_hamiltonian("# nothing\n").unwrap_err(),
            HamiltonianError::MissingHeader
        );
    }

    fn arb_term(n: usize) -> impl Strategy<Value = PauliTerm> {
        (
            -2.0f64..2.0,
            proptest::collection::vec(0u8..4, n),
        )
            .prop_filter_map("odd Y count", |(c, axes)| {
                let ops: Vec<PauliOperator> = axes
                    .iter()
                    .enumerate()
                    .map(|(q, a)| {
                        let axis = [PauliAxis::I, PauliAxis::X, PauliAxis::Y, PauliAxis::Z]
                            [*a as usize];
                        PauliOperator::new(axis, q)
                    })
                    .collect();
                let t = PauliTerm::new(c, ops).ok()?;
                (t.y_count() % 2 == 0).then_some(t)
            })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(
            terms in proptest::collection::vec(arb_term(4), 0..8)
        ) {
            let h = PauliHamiltonian::new(4, terms).unwrap();
            let text = h.to_string();
            let back = parse_hamiltonian(&text).unwrap();
            prop_assert_eq!(&back, &h);
            prop_assert_eq!(back.to_string(), text);
        }
    }
}
