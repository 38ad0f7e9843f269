use std::fmt;

use super::{Axiom, Concept};

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concept::Atomic(name) => f.write_str(name),
            Concept::Top => f.write_str("Thing"),
            Concept::Bottom => f.write_str("Nothing"),
            Concept::Not(inner) => write!(f, "(not {inner})"),
            Concept::And(l, r) => write!(f, "({l} and {r})"),
            Concept::Or(l, r) => write!(f, "({l} or {r})"),
            Concept::Forall(role, filler) => write!(f, "({role} only {filler})"),
            Concept::Exists(role, filler) => write!(f, "({role} some {filler})"),
            Concept::AtLeast(n, role, filler) => write!(f, "(atleast {n} {role} {filler})"),
            Concept::AtMost(n, role, filler) => write!(f, "(atmost {n} {role} {filler})"),
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::Subsumption { lhs, rhs } => write!(f, "{lhs} subclassof {rhs}"),
            Axiom::ConceptAssertion { concept, individual } => write!(f, "{concept}({individual})"),
            Axiom::RoleAssertion { role, subject, object } => write!(f, "{role}({subject}, {object})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_conjunction() {
        let c = Concept::and(Concept::atom("A"), Concept::atom("B"));
        assert_eq!(c.to_string(), "(A and B)");
    }

    #[test]
    fn renders_subsumption() {
        let ax = Axiom::subsumption(Concept::atom("Postdoc"), Concept::exists("owns", Concept::atom("PhD")));
        assert_eq!(ax.to_string(), "Postdoc subclassof (owns some PhD)");
    }

    #[test]
    fn renders_assertions() {
        let ax = Axiom::fact(Concept::not(Concept::atom("Quiet")), "Anne");
        assert_eq!(ax.to_string(), "(not Quiet)(Anne)");
        assert_eq!(Axiom::role_fact("likes", "Anne", "Bob").to_string(), "likes(Anne, Bob)");
        assert_eq!(Axiom::fact(Concept::Top, "a").to_string(), "Thing(a)");
    }
}
