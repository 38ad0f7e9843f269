use super::{Axiom, Concept};

/// Pushes negation down to atomic concepts.
///
/// Number restrictions dualize as `not (atleast n R C) = atmost (n-1) R C`
/// and `not (atmost n R C) = atleast (n+1) R C`.
pub fn nnf(c: &Concept) -> Concept {
    match c {
        Concept::Atomic(_) | Concept::Top | Concept::Bottom => c.clone(),
        Concept::Not(inner) => negated(inner),
        Concept::And(l, r) => Concept::and(nnf(l), nnf(r)),
        Concept::Or(l, r) => Concept::or(nnf(l), nnf(r)),
        Concept::Forall(r, f) => Concept::forall(r.clone(), nnf(f)),
        Concept::Exists(r, f) => Concept::exists(r.clone(), nnf(f)),
        Concept::AtLeast(n, r, f) => Concept::AtLeast(*n, r.clone(), Box::new(nnf(f))),
        Concept::AtMost(n, r, f) => Concept::AtMost(*n, r.clone(), Box::new(nnf(f))),
    }
}

/// NNF of `not c`.
fn negated(c: &Concept) -> Concept {
    match c {
        Concept::Atomic(_) => Concept::not(c.clone()),
        Concept::Top => Concept::Bottom,
        Concept::Bottom => Concept::Top,
        Concept::Not(inner) => nnf(inner),
        Concept::And(l, r) => Concept::or(negated(l), negated(r)),
        Concept::Or(l, r) => Concept::and(negated(l), negated(r)),
        Concept::Forall(r, f) => Concept::exists(r.clone(), negated(f)),
        Concept::Exists(r, f) => Concept::forall(r.clone(), negated(f)),
        // atleast 0 is Thing, so its negation is Nothing
        Concept::AtLeast(0, _, _) => Concept::Bottom,
        Concept::AtLeast(n, r, f) => Concept::AtMost(n - 1, r.clone(), Box::new(nnf(f))),
        Concept::AtMost(n, r, f) => Concept::AtLeast(n + 1, r.clone(), Box::new(nnf(f))),
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum NegateError {
    #[error("only concept assertions can be negated; role assertions have no ALCQ complement")]
    NotAConceptAssertion,
}

/// Turns `C(a)` into `nnf(not C)(a)`.
pub fn negate_fact(fact: &Axiom) -> Result<Axiom, NegateError> {
    match fact {
        Axiom::ConceptAssertion { concept, individual } => Ok(Axiom::ConceptAssertion {
            concept: negated(concept),
            individual: individual.clone(),
        }),
        _ => Err(NegateError::NotAConceptAssertion),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Concept {
        Concept::atom(n)
    }

    #[test]
    fn de_morgan() {
        let got = nnf(&Concept::not(Concept::and(a("A"), a("B"))));
        assert_eq!(got, Concept::or(Concept::not(a("A")), Concept::not(a("B"))));
    }

    #[test]
    fn quantifier_duality() {
        let got = nnf(&Concept::not(Concept::exists("R", a("C"))));
        assert_eq!(got, Concept::forall("R", Concept::not(a("C"))));
    }

    #[test]
    fn number_restriction_duality() {
        assert_eq!(nnf(&Concept::not(Concept::at_most(0, "R", a("C")))), Concept::at_least(1, "R", a("C")));
        assert_eq!(nnf(&Concept::not(Concept::at_least(3, "R", a("C")))), Concept::at_most(2, "R", a("C")));
    }

    #[test]
    fn negate_facts() {
        let got = negate_fact(&Axiom::fact(a("Quiet"), "Anne")).unwrap();
        assert_eq!(got, Axiom::fact(Concept::not(a("Quiet")), "Anne"));

        let got = negate_fact(&Axiom::fact(Concept::forall("admires", Concept::Bottom), "Anne")).unwrap();
        assert_eq!(got, Axiom::fact(Concept::exists("admires", Concept::Top), "Anne"));

        let got = negate_fact(&Axiom::fact(Concept::and(a("red"), a("green")), "Anne")).unwrap();
        assert_eq!(
            got,
            Axiom::fact(Concept::or(Concept::not(a("red")), Concept::not(a("green"))), "Anne")
        );
    }

    #[test]
    fn negate_rejects_role_assertion() {
        let err = negate_fact(&Axiom::role_fact("likes", "a", "b")).unwrap_err();
        assert_eq!(err, NegateError::NotAConceptAssertion);
    }
}
