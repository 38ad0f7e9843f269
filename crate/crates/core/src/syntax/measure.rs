use super::Concept;

/// Number of binary Boolean constructors (`and`, `or`) in the expression.
pub fn linguistic_level(c: &Concept) -> usize {
    let mut n = 0;
    c.walk(&mut |sub| {
        if matches!(sub, Concept::And(..) | Concept::Or(..)) {
            n += 1;
        }
    });
    n
}

/// Number of quantifiers and number restrictions.
pub fn quantifier_count(c: &Concept) -> usize {
    let mut n = 0;
    c.walk(&mut |sub| {
        if matches!(
            sub,
            Concept::Forall(..) | Concept::Exists(..) | Concept::AtLeast(..) | Concept::AtMost(..)
        ) {
            n += 1;
        }
    });
    n
}

/// Deepest chain of nested quantifiers.
pub fn quantifier_nesting(c: &Concept) -> usize {
    match c {
        Concept::Atomic(_) | Concept::Top | Concept::Bottom => 0,
        Concept::Not(inner) => quantifier_nesting(inner),
        Concept::And(l, r) | Concept::Or(l, r) => quantifier_nesting(l).max(quantifier_nesting(r)),
        Concept::Forall(_, f)
        | Concept::Exists(_, f)
        | Concept::AtLeast(_, _, f)
        | Concept::AtMost(_, _, f) => 1 + quantifier_nesting(f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Concept {
        Concept::atom(n)
    }

    #[test]
    fn levels() {
        assert_eq!(linguistic_level(&a("red")), 0);
        assert_eq!(linguistic_level(&Concept::exists("supports", a("Enthusiastic"))), 0);
        let postdoc = Concept::and(
            Concept::exists("hasDegree", a("PhD")),
            Concept::and(Concept::at_most(2, "teaches", a("PostgrCourse")), Concept::not(a("Academic"))),
        );
        assert_eq!(linguistic_level(&postdoc), 2);
        assert_eq!(quantifier_count(&postdoc), 2);
        assert_eq!(quantifier_nesting(&postdoc), 1);
    }

    #[test]
    fn nesting() {
        let c = Concept::exists("likes", Concept::exists("loves", a("Cat")));
        assert_eq!(quantifier_nesting(&c), 2);
        assert_eq!(quantifier_count(&c), 2);
    }
}
