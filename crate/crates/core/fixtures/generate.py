#!/usr/bin/env python3
"""Regenerates the fixture corpus in this directory.

Outputs: catalog.json, drafts.jsonl, roster.json, scorer_gold.json,
gold_messages.json. Deterministic: re-running reproduces the same files.
labeled_examples.json is hand-written and not touched here.
"""

import json
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

HERE = Path(__file__).resolve().parent
rng = random.Random(20261015)

# (id suffix, rubric text, sentence a student writes when the item is met,
#  concept phrase used in feedback, historic comments)
WA1 = [
    ("substitutes", "Almond milk and oat milk are substitutes in consumption.",
     "Almond milk and oat milk are substitutes, so consumers switch between them in consumption.",
     "how almond milk and oat milk relate as substitutes",
     ["What is the relationship between almond milk and oat milk in consumer choice?"]),
    ("preference_shift", "A rising preference for oat milk shifts oat milk demand to the right.",
     "The rising preference for oat milk shifts the oat milk demand curve to the right.",
     "the effect of the preference change on oat milk demand",
     ["Which curve moves when preferences for oat milk change, and in which direction?"]),
    ("almond_demand_left", "Almond milk demand shifts left as consumers prefer oat milk.",
     "Because consumers prefer oat milk, almond milk demand shifts left.",
     "what happens to demand in the almond milk market",
     ["Remember to analyze the almond milk market as well as the oat milk market."]),
    ("oat_equilibrium", "Oat milk equilibrium price and quantity both rise.",
     "In the oat milk market the equilibrium price and equilibrium quantity both rise.",
     "the new equilibrium price and quantity for oat milk",
     ["State what happens to both equilibrium price and quantity in the oat milk market."]),
    ("almond_equilibrium", "Almond milk equilibrium price and quantity both fall.",
     "In the almond milk market the equilibrium price falls and the equilibrium quantity falls.",
     "the new equilibrium in the almond milk market",
     ["Describe the change in equilibrium price and quantity for almond milk."]),
    ("policy_choice", "Chooses either the almond milk price floor or the agricultural water tax.",
     "This essay analyzes the tax on agricultural water use rather than the almond milk price floor.",
     "which policy the essay analyzes",
     ["Make clear which of the two policies you are analyzing."]),
    ("floor_binding", "A binding price floor is set above the almond milk equilibrium price.",
     "A binding price floor must sit above the almond milk equilibrium price to matter.",
     "where a binding price floor sits relative to equilibrium",
     ["Where must a price floor be set for it to be binding?"]),
    ("floor_surplus", "The price floor creates a surplus of almond milk.",
     "At the price floor, quantity supplied exceeds quantity demanded, which creates a surplus of almond milk.",
     "the surplus a price floor creates",
     ["What happens to quantity supplied and quantity demanded at the floor price?"]),
    ("water_tax_cost", "A water tax raises almond growers' production cost.",
     "The water tax raises production cost for almond growers who irrigate heavily.",
     "how the water tax affects production cost",
     ["How does a tax on water change the cost of producing almonds?"]),
    ("water_input", "Almond milk requires more water as an input than alternatives.",
     "Almond milk requires much more water as an input than oat milk or other alternatives.",
     "the water intensity of almond milk compared with alternatives",
     ["Compare the water used to produce almond milk and its alternatives."]),
    ("supply_left", "The water tax shifts almond milk supply to the left.",
     "Higher water costs shift the almond milk supply curve to the left.",
     "which curve the water tax shifts",
     ["Which curve shifts when input costs rise?"]),
    ("along_curve", "Quantity demanded changes along the demand curve after a supply shift.",
     "After the supply shift, quantity demanded moves along the demand curve instead of the curve shifting.",
     "the difference between demand and quantity demanded",
     ["Make sure you distinguish a change in demand from a change in quantity demanded."]),
    ("tax_incidence", "The tax burden is shared between almond consumers and producers.",
     "The tax burden is shared, since almond consumers pay more and producers receive less.",
     "who bears the burden of the tax",
     ["Who ends up paying the tax, consumers or producers?"]),
    ("elasticity_incidence", "Incidence depends on the price elasticity of supply and demand.",
     "Incidence depends on elasticity, because the less elastic side of supply and demand bears more.",
     "how elasticity shapes the tax incidence",
     ["How do the elasticities of supply and demand determine who bears the tax?"]),
    ("tax_revenue", "Government tax revenue equals the tax times the quantity sold.",
     "Government tax revenue equals the tax per gallon times the quantity sold after the tax.",
     "how to compute government tax revenue",
     ["How is tax revenue calculated from the tax and the quantity sold?"]),
    ("deadweight_loss", "The tax creates a deadweight loss from lost trades.",
     "The tax creates a deadweight loss because some mutually beneficial trades no longer happen.",
     "the deadweight loss of the policy",
     ["Identify the deadweight loss that the policy creates."]),
    ("consumer_surplus", "Consumer surplus in the almond milk market falls.",
     "Consumer surplus in the almond milk market falls since buyers pay a higher price.",
     "the change in consumer surplus",
     ["Discuss what happens to consumer surplus."]),
    ("producer_surplus", "Producer surplus of almond growers falls.",
     "Producer surplus of almond growers falls because they sell less at a lower net price.",
     "the welfare of almond producers",
     ["Remember to discuss what the policy implies for producer welfare."]),
    ("water_market", "Lower almond production reduces demand for agricultural water.",
     "Lower almond production reduces the demand for agricultural water in the region.",
     "the link between almond production and water demand",
     ["Trace the effect of lower almond output on the water market."]),
    ("water_consumers", "Identifies farmers and households as consumers in the water market.",
     "Farmers and households are both consumers in the water market.",
     "who the consumers in the water market are",
     ["Identify the consumers and producers of each market."]),
    ("drought_context", "Connects the policy to drought and water scarcity in California.",
     "The policy responds to drought and water scarcity in California where almonds grow.",
     "the drought context of the policy",
     ["Connect the policy to the water scarcity that motivates it."]),
    ("externality_water", "Overuse of water imposes a negative externality on others.",
     "Overuse of water by growers imposes a negative externality on downstream users and others.",
     "the externality created by water overuse",
     ["Is there an externality in water use? Who bears it?"]),
    ("marginal_social_cost", "Social marginal cost of water exceeds private marginal cost.",
     "The social marginal cost of water exceeds the private marginal cost paid by farms.",
     "how external marginal cost relates to social marginal cost",
     ["Remember to discuss what external marginal cost is and how it relates to social marginal cost."]),
    ("pigouvian", "The water tax works as a Pigouvian tax correcting the externality.",
     "The water tax works like a Pigouvian tax that corrects the externality.",
     "how a corrective tax addresses the externality",
     ["How can a tax correct an externality?"]),
    ("efficient_quantity", "The tax moves water use toward the efficient quantity.",
     "The tax moves water use toward the efficient quantity where social cost meets benefit.",
     "the efficient quantity of water use",
     ["Where is the efficient quantity of water use?"]),
    ("tradeoff_farmers", "Trade-off: farm income and jobs fall in almond regions.",
     "One trade-off is that farm income and jobs fall in almond regions.",
     "the costs of the policy for farm communities",
     ["What are the trade-offs of the policy for farming communities?"]),
    ("tradeoff_environment", "Trade-off: environmental benefits from saved water.",
     "On the other side, the environmental benefits from saved water are large.",
     "the environmental benefits of the policy",
     ["Weigh the environmental benefits against the costs."]),
    ("alternative_milks", "Prices of alternative milks rise as demand moves to them.",
     "Prices of alternative milks rise as demand moves toward them.",
     "what happens in the alternative milk markets",
     ["What happens in the markets for the alternatives?"]),
    ("long_run", "In the long run growers may switch crops or adopt irrigation technology.",
     "In the long run growers may switch crops or adopt better irrigation technology.",
     "long-run adjustments by growers",
     ["How might growers adjust in the long run?"]),
    ("graph_axes", "The graph labels price and quantity axes.",
     "My graph labels the price axis and the quantity axis clearly.",
     "the labeling of the graph axes",
     ["Label both axes of your graph."]),
    ("graph_shift", "The graph shows the curve shift with old and new equilibrium.",
     "The graph shows the curve shift with the old and new equilibrium marked.",
     "how the graph shows the shift",
     ["Show the shift and both equilibria on your graph."]),
    ("society_impact", "Overall impact of the policy on society.",
     "The overall impact of the policy on society is positive once the externality is counted.",
     "the overall impact on society",
     ["What is your overall assessment of the impact on society?"]),
    ("article_evidence", "Uses evidence from the news article.",
     "The news article reports that almond farms use a tenth of the state's water, which supports this evidence.",
     "evidence drawn from the article",
     ["Did you present any information in your essay that was drawn from the article?"]),
    ("policy_effect_price", "The policy raises the price consumers pay for almond milk.",
     "The policy raises the price consumers pay for almond milk at the store.",
     "the price consumers pay under the policy",
     ["What happens to the price consumers pay?"]),
    ("conclusion", "Recommends whether to adopt the policy with justification.",
     "I recommend that the state adopt the policy, and my justification is that its benefits exceed its costs.",
     "the recommendation and its justification",
     ["End with a clear recommendation and say why."]),
]

WA2 = [
    ("define_failure", "Market failure occurs when the market fails to maximize total surplus.",
     "Market failure occurs when the market fails to maximize total surplus without intervention.",
     "the definition of market failure",
     ["Make sure to define market failure and include all parts of the definition."]),
    ("article_choice", "Selects a recent news article illustrating a market failure.",
     "I select a recent news article illustrating a market failure: illegal fishing.",
     "the article you selected",
     ["Did you choose a recent article that shows a market failure?"]),
    ("failure_type", "Names the type of market failure.",
     "I name the type of market failure here: a common resource problem.",
     "the type of market failure",
     ["Which type of market failure does your article show?"]),
    ("rival", "Explains whether the good is rival in consumption.",
     "The good is rival because one person's catch leaves fewer fish for others in consumption.",
     "whether the good is rival",
     ["Explain whether consumption of the good is rival."]),
    ("excludable", "Explains whether the good is excludable.",
     "The good is not excludable because nobody can be stopped from fishing the open ocean.",
     "whether the good is excludable",
     ["Explain whether people can be excluded from the good."]),
    ("classification", "Classifies the good as public, common, club, or private.",
     "I classify ocean fish as a common good, not a public, club, or private good, since they are rival yet open to all.",
     "the classification of the good",
     ["Compare your market failure to another type of good."]),
    ("overconsumption", "Common resources lead to overconsumption.",
     "Common resources lead to overconsumption because each user ignores the cost to others.",
     "why common resources are overused",
     ["Why do common resources get used too much?"]),
    ("tragedy", "Describes the tragedy of the commons.",
     "This is the tragedy of the commons, where individual incentives deplete a shared stock.",
     "the tragedy of the commons",
     ["Connect your example to the tragedy of the commons."]),
    ("externality_type", "States that the externality is negative.",
     "I state that the externality is negative, since fishing reduces stocks for others.",
     "whether the externality is positive or negative",
     ["Be sure to say whether the externality is positive or negative."]),
    ("external_cost", "External marginal cost is the cost imposed on third parties.",
     "The external marginal cost is the cost each catch imposes on third parties.",
     "external marginal cost",
     ["What is the external marginal cost here?"]),
    ("social_cost", "Social marginal cost equals private plus external marginal cost.",
     "Social marginal cost equals private marginal cost plus external marginal cost.",
     "how social marginal cost is built up",
     ["How do private and external costs combine?"]),
    ("social_benefit", "Compares social marginal benefit with private marginal benefit.",
     "Here the social marginal benefit equals the private marginal benefit.",
     "social versus private marginal benefit",
     ["Compare social and private marginal benefit."]),
    ("market_quantity", "Market quantity exceeds the efficient quantity.",
     "The market quantity of fish caught exceeds the efficient quantity.",
     "market quantity versus efficient quantity",
     ["How does the market quantity compare with the efficient quantity?"]),
    ("efficient_point", "The efficient quantity is where social marginal cost equals social marginal benefit.",
     "The efficient quantity is where social marginal cost equals social marginal benefit.",
     "where the efficient quantity lies",
     ["Where is the efficient quantity on your graph?"]),
    ("deadweight", "Identifies the deadweight loss from overproduction.",
     "The deadweight loss comes from overproduction, the units caught beyond the efficient quantity.",
     "the deadweight loss",
     ["Show the deadweight loss on your graph."]),
    ("graph_curves", "The graph shows private and social cost curves.",
     "My graph shows the private cost curve and the social cost curve separately.",
     "the cost curves on the graph",
     ["Draw both private and social cost curves."]),
    ("graph_labels", "The graph labels axes and equilibrium points.",
     "The graph labels the axes, the market equilibrium, and the efficient point.",
     "the graph labels",
     ["Label your axes and equilibrium points."]),
    ("remedy", "Proposes a remedy for the market failure.",
     "As a remedy, I propose that the government set catch quotas to fix the market failure.",
     "the remedy you propose",
     ["What remedy would you propose?"]),
    ("remedy_mechanism", "Explains how the remedy moves quantity to the efficient level.",
     "Quotas move the quantity down to the efficient level by capping the catch.",
     "how the remedy reaches efficiency",
     ["Explain how your remedy changes the quantity."]),
    ("tax_remedy", "Discusses a corrective tax equal to external marginal cost.",
     "A corrective tax equal to the external marginal cost would also work.",
     "a corrective tax as a remedy",
     ["Could a tax fix the problem? How large should it be?"]),
    ("property_rights", "Discusses property rights or tradable permits.",
     "Assigning property rights through tradable permits is another option.",
     "property rights as a remedy",
     ["Could assigning property rights help?"]),
    ("enforcement", "Addresses enforcement costs of the remedy.",
     "Enforcement costs of this remedy are high because patrolling the ocean is expensive.",
     "the enforcement costs of the remedy",
     ["How costly is it to enforce your remedy?"]),
    ("government_failure", "Considers the risk of government failure.",
     "Government failure is a risk if quotas are set by lobbying rather than science.",
     "the risk of government failure",
     ["Could the government intervention itself fail?"]),
    ("stakeholders", "Identifies affected stakeholders.",
     "The affected stakeholders include fishers, consumers, and coastal communities.",
     "the stakeholders affected",
     ["Who are the stakeholders affected?"]),
    ("equity", "Discusses equity effects of the remedy.",
     "The equity effects of the remedy matter because small fishers may lose income under quotas.",
     "the equity effects",
     ["Who gains and who loses under the remedy?"]),
    ("evidence_numbers", "Uses quantitative evidence from the article.",
     "The article reports that fish stocks fell by forty percent, which is strong quantitative evidence.",
     "quantitative evidence from the article",
     ["Use numbers from the article to support your claims."]),
    ("citation", "Cites the article in the text.",
     "As the article states (Smith 2024), and I cite the source in the text to support the claim.",
     "in-text citation",
     ["Include in-text citations for the article."]),
    ("nonrival_ai", "Explains why the good is nonrival when it is.",
     "Information goods such as AI models are nonrival because one person's use does not reduce another's.",
     "why the good is nonrival",
     ["Explain how exactly the good is nonrival and excludable."]),
    ("free_rider", "Explains the free-rider problem for public goods.",
     "The free-rider problem arises for public goods because people can benefit without paying.",
     "the free-rider problem",
     ["Where does the free-rider problem come in?"]),
    ("positive_externality", "Recognizes positive externalities where relevant.",
     "Healthy fish stocks also create a positive externality for tourism.",
     "positive externalities",
     ["Are there any positive externalities?"]),
    ("comparison", "Compares the failure with a similar failure in another market.",
     "I compare this failure with a similar failure in another market: overgrazing of shared pasture.",
     "a comparison with a similar failure",
     ["Compare your market failure to a similar failure elsewhere."]),
    ("long_run_effects", "Discusses long-run effects on the resource stock.",
     "The long-run effects on the resource stock may be collapse without limits.",
     "long-run effects on the stock",
     ["What happens to the stock in the long run?"]),
    ("welfare_change", "Explains the change in total welfare after the remedy.",
     "Total welfare rises after the remedy because the deadweight loss shrinks.",
     "the change in total welfare",
     ["How does total welfare change after your remedy?"]),
    ("structure", "Follows the required analytical structure.",
     "I follow the required analytical structure: first the failure, then its analysis, then a remedy.",
     "the structure of the analysis",
     ["Follow the required analysis structure."]),
    ("conclusion", "Concludes with an evaluation of the remedy.",
     "I conclude with an evaluation of the remedy: quotas are best despite their monitoring burden.",
     "the concluding evaluation",
     ["Conclude with an evaluation of your remedy."]),
]

assert len(WA1) == 35 and len(WA2) == 35

# 24 items weigh 1 and 11 weigh 2, so totals are multiples of 1/46.
HEAVY = {0, 2, 5, 8, 10, 12, 15, 18, 22, 27, 34}

FILLER = [
    "This topic matters for many people.",
    "There are several points to consider here.",
    "I will now turn to the next part of the analysis.",
    "This is an interesting question to think about.",
    "Many people have opinions about this issue.",
]


def rubric_items(prefix, items):
    out = []
    for i, (suffix, text, _, _, historic) in enumerate(items):
        out.append({
            "id": f"{prefix}-{i + 1:02d}-{suffix}",
            "text": text,
            "weight": 2 if i in HEAVY else 1,
            "historic_feedback": historic,
        })
    return out


CATALOG = [
    {
        "id": "wa1",
        "prompt_text": "Given the rise in preference for oat milk, analyze one of two policies: a price floor "
                       "for almond milk or a tax on agricultural water use. Explain its expected effects, "
                       "trade-offs, and impact on society.",
        "rubric_items": rubric_items("wa1", WA1),
        "exemplar_questions": [
            "What is the relationship between almond milk and oat milk in terms of consumer choice?",
            "How might a change in input costs show up on your supply and demand graph?",
            "Who bears the cost of the policy, and how would you show it?",
        ],
        "draft_stages": ["first", "final"],
    },
    {
        "id": "wa2",
        "prompt_text": "Select a news article from the past three months that illustrates a market failure, "
                       "identify its type, and propose a remedy.",
        "rubric_items": rubric_items("wa2", WA2),
        "exemplar_questions": [
            "What makes this good rival or nonrival?",
            "How does the market quantity compare with the efficient quantity?",
            "How would your remedy move the market toward efficiency?",
        ],
        "draft_stages": ["first", "final"],
    },
]

STUDENTS = 60
SECTIONS = ["A", "B", "C", "D", "E", "F"]
WEIGHTS = [2 if i in HEAVY else 1 for i in range(35)]
TOTAL_WEIGHT = sum(WEIGHTS)
assert TOTAL_WEIGHT == 46


def subset_with_weight(target):
    """A random set of rubric indices whose weights sum to target."""
    while True:
        order = list(range(35))
        rng.shuffle(order)
        chosen, total = [], 0
        for i in order:
            if total + WEIGHTS[i] <= target:
                chosen.append(i)
                total += WEIGHTS[i]
            if total == target:
                return sorted(chosen)


def first_draft_targets():
    """Weight sums for the 120 first drafts: min 8/46, max 40/46, mean near 0.48."""
    targets = [rng.randint(14, 30) for _ in range(118)] + [8, 40]
    goal = round(0.48 * TOTAL_WEIGHT * 120)
    while sum(targets) != goal:
        i = rng.randrange(118)
        step = 1 if sum(targets) < goal else -1
        if 10 <= targets[i] + step <= 38:
            targets[i] += step
    rng.shuffle(targets)
    return targets


def essay_text(items, met, extra_filler):
    sentences = [items[i][2] for i in met]
    sentences += rng.sample(FILLER, extra_filler)
    rng.shuffle(sentences)
    paragraphs, cur = [], []
    for s in sentences:
        cur.append(s)
        if len(cur) == 4:
            paragraphs.append(" ".join(cur))
            cur = []
    if cur:
        paragraphs.append(" ".join(cur))
    return "\n\n".join(paragraphs), sentences


def main():
    (HERE / "catalog.json").write_text(json.dumps({"assignments": CATALOG}, indent=2) + "\n")

    targets = iter(first_draft_targets())
    base = datetime(2025, 9, 22, 17, 0, tzinfo=timezone.utc)
    drafts, gold = [], []
    students, met_sets = [], {}
    for s in range(STUDENTS):
        sid = f"stu{s + 1:03d}"
        section = SECTIONS[s % len(SECTIONS)]
        group_one = SECTIONS.index(section) % 2 == 0
        students.append({
            "student_id": sid,
            "section": section,
            "conditions": {
                "wa1": "baseline" if group_one else "feedback_writer",
                "wa2": "feedback_writer" if group_one else "baseline",
            },
        })
        for a, items, offset in (("wa1", WA1, 0), ("wa2", WA2, 35)):
            met = subset_with_weight(next(targets))
            text, sentences = essay_text(items, met, rng.randint(1, 3))
            first_id = f"{a}-{sid}-first"
            drafts.append({
                "essay_id": first_id, "student_id": sid, "assignment_id": a, "stage": "first",
                "text": text, "submitted_at": (base + timedelta(days=offset, minutes=s)).isoformat().replace("+00:00", "Z"),
            })
            met_sets[first_id] = met
            # Final draft: most sentences kept, a few fillers dropped, new items added.
            missing = [i for i in range(35) if i not in met]
            added = sorted(rng.sample(missing, min(len(missing), rng.randint(3, 8))))
            kept = [x for x in sentences if x not in FILLER or rng.random() < 0.5]
            final_sentences = list(kept)
            for i in added:
                final_sentences.insert(rng.randint(0, len(final_sentences)), items[i][2])
            paragraphs = [" ".join(final_sentences[k:k + 4]) for k in range(0, len(final_sentences), 4)]
            drafts.append({
                "essay_id": f"{a}-{sid}-final", "student_id": sid, "assignment_id": a, "stage": "final",
                "text": "\n\n".join(paragraphs),
                "submitted_at": (base + timedelta(days=offset + 14, minutes=s)).isoformat().replace("+00:00", "Z"),
            })

    with open(HERE / "drafts.jsonl", "w") as f:
        for d in drafts:
            f.write(json.dumps(d) + "\n")

    graders = [{"grader_id": f"ta{i + 1}", "sections": [sec]} for i, sec in enumerate(SECTIONS)]
    graders.append({"grader_id": "head-ta", "sections": SECTIONS})
    (HERE / "roster.json").write_text(json.dumps({"students": students, "graders": graders}, indent=2) + "\n")

    # Expert labels for 30 first drafts per assignment: 60 x 35 = 2,100.
    for a, items in (("wa1", WA1), ("wa2", WA2)):
        ids = sorted(k for k in met_sets if k.startswith(a))
        for essay_id in rng.sample(ids, 30):
            for i, item in enumerate(items):
                gold.append({
                    "essay_id": essay_id,
                    "rubric_id": f"{a}-{i + 1:02d}-{item[0]}",
                    "met": 1 if i in met_sets[essay_id] else 0,
                })
    gold.sort(key=lambda g: (g["essay_id"], g["rubric_id"]))
    (HERE / "scorer_gold.json").write_text(json.dumps(gold, indent=1) + "\n")

    (HERE / "gold_messages.json").write_text(json.dumps(gold_messages(), indent=1) + "\n")


# Idea-unit templates with the labels an annotator assigns them.
# types: (summary, praise, problem, solution); quality: (accuracy, tone, independence, actionability).
UNIT_TEMPLATES = [
    ("praise", "Great job explaining {c}.", (0, 1, 0, 0), False, (1, 1, None, None)),
    ("praise_detail", "Nice work connecting {c} to the rest of your analysis.", (0, 1, 0, 0), False, (1, 1, None, None)),
    ("summary", "You mentioned {c} in your second paragraph.", (1, 0, 0, 0), False, (1, 1, None, None)),
    ("problem", "Your essay does not yet address {c}.", (0, 0, 1, 0), False, (1, 0, 0, 1)),
    ("hint", "Remember to discuss {c} and how it connects to your graph.", (0, 0, 0, 1), False, (1, 1, 1, 1)),
    ("question", "Can you explore {c} a bit further in your analysis?", (0, 0, 0, 1), False, (1, 1, 1, 1)),
    ("directive", "You should explicitly state {c} in one sentence.", (0, 0, 0, 1), False, (1, 1, 0, 1)),
    ("vague", "Be sure to explain this more.", (0, 0, 0, 1), False, (1, 1, 0, 0)),
    ("prose", "Watch the comma splices in this paragraph.", (0, 0, 1, 1), True, (1, 1, None, None)),
    ("inaccurate", "You treat {c} as a shift of both curves, but only quantity changes here.", (0, 0, 1, 0), False, (0, 0, 0, 1)),
    ("cold", "Your essay gets {c} wrong.", (0, 0, 1, 0), False, (1, 0, 0, 0)),
]


def gold_unit(kind, concept, rubric_id):
    for name, template, types, prose, quality in UNIT_TEMPLATES:
        if name == kind:
            links = [] if name in ("vague", "prose") else [rubric_id]
            return {
                "text": template.format(c=concept),
                "rubric_links": links,
                "types": dict(zip(("summary", "praise", "problem", "solution"), map(bool, types))),
                "prose_mechanics_only": prose,
                "quality": dict(zip(("accuracy", "tone", "independence", "actionability"), quality)),
            }
    raise KeyError(kind)


def gold_messages():
    items = [(f"wa1-{i + 1:02d}-{it[0]}", it[3]) for i, it in enumerate(WA1)]
    shapes = [
        ["praise"], ["hint"], ["question"], ["summary", "hint"], ["problem", "hint"],
        ["praise", "question"], ["summary", "problem", "question"], ["directive"],
        ["problem", "vague"], ["praise", "prose"], ["summary", "directive"], ["praise_detail", "hint"],
        ["inaccurate"], ["praise", "cold"], ["summary", "inaccurate", "hint"],
    ]
    conditions = ["feedback_writer", "baseline"]
    out = []
    for m in range(100):
        rubric_id, concept = items[m % len(items)]
        shape = shapes[m % len(shapes)]
        units = [gold_unit(kind, concept, rubric_id) for kind in shape]
        second = json.loads(json.dumps(units))
        # The second annotator disagrees on one label in a tenth of messages.
        if m % 10 == 3:
            u = second[-1]
            if m % 20 == 3:
                u["quality"]["accuracy"] = 1 - u["quality"]["accuracy"]
            elif u["quality"]["actionability"] is not None:
                u["quality"]["actionability"] = 1 - u["quality"]["actionability"]
            else:
                u["quality"]["tone"] = 1 - u["quality"]["tone"]
        text = " ".join(u["text"] for u in units)
        out.append({
            "message": {
                "message_id": f"gm{m + 1:03d}",
                "essay_id": f"wa1-stu{(m % 60) + 1:03d}-first",
                "rubric_id": rubric_id,
                "text": text,
                "condition": conditions[m % 2],
            },
            "units": units,
            "annotators": [units, second],
        })
    return out


if __name__ == "__main__":
    main()
