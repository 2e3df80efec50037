//! Generation prompts sent to the text completer.
//!
//! Slots are written `{name}` and filled by [`fill`].

pub const BIO: &str = "Your task is to write a short bio for a random person within 100 words. You shall pick a random name, use gender {random_gender}, race {random_race}, and an age {random_age}. The bio should describe the college majors, some personal characters, and interests. Keep the bio short. For example, 'Linda is 31 years old, single, outspoken, and very bright. She majored in philosophy. As a student, she was deeply concerned with issues of discrimination and social justice, and also participated in anti-nuclear demonstrations. Write another example here:";

pub const RELEVANT_HOBBY: &str = "Your next step is to find a hobby or activity that the person mentioned before will be interested in based on your experience. The hobby or activity must be relevant to the bio descriptions. In the example above, we can say that 'Linda is active in the feminist movement.' because her bio says she was concerned with discrimination and social justice. Please keep your answer in one sentence and begin with that person's name, but refrain from using any words used in the bio.";

pub const RANDOM_HOBBY: &str = "Your task is to find a random hobby or activity, and keep your answer short in one sentence. For example, you can say 'cook Asian foods.'";

pub const STORY_ENDING: &str = "Your task is to complete the last sentence of the following problem to create a conjunction fallacy quiz:\n{context} Which is more likely?\n(a) {option_a}\n(b) {option_b_prefix}";

pub const STORY_ENDING_IRRELEVANT: &str = "Your next task is to complete the last sentence of the same problem but make sure your completion after '{connector}' is now irrelevant to the content intentionally:";

pub const DISEASE_EXAMPLE: &str = "A 55-year-old woman had pulmonary embolism documented angiographically 10 days after a cholecystectomy. Which is more likely?\n(a) dyspnea and hemiparesis\n(b) hemiparesis";

pub const DISEASE_QUIZ: &str = "Your task is to create another conjunction fallacy quiz following the format in the example below. Do not mention the name 'conjunction fallacy.' You should pick a random name for the patient, use gender {random_gender} race {random_race}, an age {random_age} and the disease {random_disease} in your new problem statement. The question should be 'Which one is more likely?' followed by two options (a) and (b), one of which should be a subset of the other. You can randomly switch the order of which option is (a) and which is (b). You should use the symptoms {random_symptom_one} in both options and add {random_symptom_two} to the longer option only. Do not make any changes to the given disease or the symptoms.\n\n{example}\n\nHere is the new problem:";

pub const DISEASE_QUIZ_IRRELEVANT: &str = "Your task is to create another conjunction fallacy quiz following the format in the example below. Do not mention the name 'conjunction fallacy.' You should pick a random name for the patient, use gender {random_gender} race {random_race}, an age {random_age} and the disease {random_disease} in your new problem statement. The question should be 'Which one is more likely?' followed by two options (a) and (b), one of which should be a subset of the other. You can randomly switch the order of which option is (a) and which is (b). You should use the symptoms {random_symptom_one} in both options. You should add another random symptoms to the longer option only, which must be completely irrelevant to the disease {random_disease} intentionally. Do not make any changes to the given disease or the symptoms.\n\n{example}\n\nHere is the new problem:";

pub const CELEBRITY: &str = "Create one example that look like this:
Suppose [celebrity is going to do something]. Which is more likely:
(a) [Something unlikely for this person]
(b) [Something unlikely for this person] but [something extremely likely for this person]

Here are some examples:

Suppose Taylor Swift is going to have another tour in 2027. Which is more likely:
(a) Her first show is a flop.
(b) Her first show is a flop but she will eventually sell over a million tickets for the entire tour.
Suppose Joe Biden is running for president in 2024. Which is more likely:
(a) Joe Biden will win the national popular vote
(b) Joe Biden will win the national popular vote but lose the Electoral College vote
Suppose Bjorn Borg reaches the Wimbledon finals. Which outcome is more likely?
(a) Borg will lose the first set
(b) Borg will lose the first set but win the match
Complete the following. Do not output anything else.
Suppose {random_celebrity}";

pub const SYLLOGISM: &str = "Fill in the blanks in the following template. Do not output anything else.
All [objects] are [category].
Some [category]s [characteristic traits of this category].
Therefore some [same objects as before] [characteristic traits this category].
Make sure that the characteristic traits of this category only fit for a subset of this category but not for all.
For example:
All carrots are vegetables.
Some vegetables are rich in fiber.
Therefore, some carrots are rich in fiber.
All roses are flowers.
Some flowers fade quickly.
Therefore some roses fade quickly.
All actors are performers.
Some performers are skilled in improvisation.
Therefore some actors are skilled in improvisation.
All {random_object} are ";

/// Replace every `{key}` with its value.
pub fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in slots {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_replaces_all_slots() {
        let p = fill(CELEBRITY, &[("random_celebrity", "Adele")]);
        assert!(p.ends_with("Suppose Adele"));
        let p = fill(
            DISEASE_QUIZ,
            &[
                ("random_gender", "female"),
                ("random_race", "Hispanic"),
                ("random_age", "40"),
                ("random_disease", "influenza"),
                ("random_symptom_one", "fever"),
                ("random_symptom_two", "chills"),
                ("example", DISEASE_EXAMPLE),
            ],
        );
        assert!(!p.contains('{'));
        assert!(p.contains("use the symptoms fever in both options and add chills"));
    }
}
