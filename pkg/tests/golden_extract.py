"""Hand-traced extraction cases.

Each entry is ``(sentence, expected, tags)`` where ``expected`` lists
``(cause, rel_type, negated, passive, effect)`` in emission order. The tags
record which forms a case exercises and which lexemes it covers.
"""

from __future__ import annotations

D, C, K = "Destruction", "Causation", "Creation"

GOLDEN = [
    # --- Destruction ---------------------------------------------------------
    ("No deal will destroy the fishing industry.",
     [("No deal", D, False, False, "the fishing industry")], ("active", "destroy")),
    ("The fishing industry would be destroyed by no deal.",
     [("no deal", D, False, True, "The fishing industry")], ("passive", "destroy")),
    ("A no-deal Brexit would certainly destroy UK's economy and labour market.",
     [("A no-deal Brexit", D, False, False, "UK's economy and labour market")], ("active", "destroy")),
    ("No deal won't destroy anything.",
     [("No deal", D, True, False, "anything")], ("negated", "destroy")),
    ("the farms that no deal will destroy",
     [("no deal", D, False, False, "the farms")], ("end", "destroy")),

    ("Crashing out demolishes our credibility.",
     [("Crashing out", D, False, False, "our credibility")], ("active", "demolish")),
    ("Our credibility was demolished by the no deal threat.",
     [("the no deal threat", D, False, True, "Our credibility")], ("passive", "demolish")),
    ("A no deal exit would not demolish the union.",
     [("A no deal exit", D, True, False, "the union")], ("negated", "demolish")),
    ("the reputation that no deal demolished",
     [("no deal", D, False, False, "the reputation")], ("end", "demolish")),

    ("No deal will annihilate small exporters.",
     [("No deal", D, False, False, "small exporters")], ("active", "annihilate")),
    ("Small exporters will be annihilated by no deal.",
     [("no deal", D, False, True, "Small exporters")], ("passive", "annihilate")),
    ("No deal will not annihilate exporters.",
     [("No deal", D, True, False, "exporters")], ("negated", "annihilate")),

    ("No deal would obliterate the peace process.",
     [("No deal", D, False, False, "the peace process")], ("active", "obliterate")),
    ("The peace process could be obliterated by a no-deal exit.",
     [("a no-deal exit", D, False, True, "The peace process")], ("passive", "obliterate")),
    ("the progress that no deal would obliterate",
     [("no deal", D, False, False, "the progress")], ("end", "obliterate")),

    ("No deal will cancel thousands of flights.",
     [("No deal", D, False, False, "thousands of flights")], ("active", "cancel")),
    ("Flights will be cancelled by no deal.",
     [("no deal", D, False, True, "Flights")], ("passive", "cancel")),
    ("No deal can't cancel the summer holidays.",
     [("No deal", D, True, False, "the summer holidays")], ("negated", "cancel")),
    ("the holidays that no deal canceled",
     [("no deal", D, False, False, "the holidays")], ("end", "cancel")),

    ("No deal eradicates decades of cooperation.",
     [("No deal", D, False, False, "decades of cooperation")], ("active", "eradicate")),
    ("Decades of cooperation are eradicated by no deal.",
     [("no deal", D, False, True, "Decades of cooperation")], ("passive", "eradicate")),

    ("No deal will extirpate workers rights.",
     [("No deal", D, False, False, "workers rights")], ("active", "extirpate")),
    ("Workers rights would be extirpated by no deal.",
     [("no deal", D, False, True, "Workers rights")], ("passive", "extirpate")),

    ("No deal eliminates any transition period.",
     [("No deal", D, False, False, "any transition period")], ("active", "eliminate")),
    ("The transition period is eliminated by no deal.",
     [("no deal", D, False, True, "The transition period")], ("passive", "eliminate")),
    ("No deal would not eliminate the backstop.",
     [("No deal", D, True, False, "the backstop")], ("negated", "eliminate")),

    ("No deal will wipe out small farms.",
     [("No deal", D, False, False, "small farms")], ("active", "wipe out")),
    ("Small farms will be wiped out by no deal.",
     [("no deal", D, False, True, "Small farms")], ("passive", "wipe out")),
    ("the savings that no deal will wipe out",
     [("no deal", D, False, False, "the savings")], ("end", "wipe out")),

    ("No deal would wipe off billions from the markets.",
     [("No deal", D, False, False, "billions from the markets")], ("active", "wipe off")),
    ("Billions were wiped off by the no deal scare.",
     [("the no deal scare", D, False, True, "Billions")], ("passive", "wipe off")),

    ("No deal kills jobs.",
     [("No deal", D, False, False, "jobs")], ("active", "kill")),
    ("Jobs will be killed by no deal.",
     [("no deal", D, False, True, "Jobs")], ("passive", "kill")),
    ("No deal will not kill jobs.",
     [("No deal", D, True, False, "jobs")], ("negated", "kill")),

    # --- Causation -----------------------------------------------------------
    ("Chaos will be caused by no deal",
     [("no deal", C, False, True, "Chaos")], ("passive", "cause")),
    ("No deal will not cause shortages",
     [("No deal", C, True, False, "shortages")], ("negated", "cause")),
    ("No deal causes long queues at Dover.",
     [("No deal", C, False, False, "long queues at Dover")], ("active", "cause")),
    ("the panic that no deal caused",
     [("no deal", C, False, False, "the panic")], ("end", "cause")),

    ("No deal will determine the fate of farmers.",
     [("No deal", C, False, False, "the fate of farmers")], ("active", "determine")),
    ("The fate of farmers is determined by no deal.",
     [("no deal", C, False, True, "The fate of farmers")], ("passive", "determine")),

    ("No deal would engender deep resentment.",
     [("No deal", C, False, False, "deep resentment")], ("active", "engender")),
    ("Deep resentment was engendered by no deal.",
     [("no deal", C, False, True, "Deep resentment")], ("passive", "engender")),

    ("No deal entails border checks.",
     [("No deal", C, False, False, "border checks")], ("active", "entail")),
    ("Border checks are entailed by no deal.",
     [("no deal", C, False, True, "Border checks")], ("passive", "entail")),
    ("No deal wouldn't entail tariffs.",
     [("No deal", C, True, False, "tariffs")], ("negated", "entail")),

    ("No deal will provoke a recession.",
     [("No deal", C, False, False, "a recession")], ("active", "provoke")),
    ("A recession will be provoked by no deal.",
     [("no deal", C, False, True, "A recession")], ("passive", "provoke")),
    ("the recession that no deal will provoke",
     [("no deal", C, False, False, "the recession")], ("end", "provoke")),

    ("No deal could trigger panic buying.",
     [("No deal", C, False, False, "panic buying")], ("active", "trigger")),
    ("Panic buying was triggered by no deal.",
     [("no deal", C, False, True, "Panic buying")], ("passive", "trigger")),
    ("the chaos that no deal would trigger",
     [("no deal", C, False, False, "the chaos")], ("end", "trigger")),
    ("the chaos that no deal would not trigger",
     [("no deal", C, True, False, "the chaos")], ("end", "negated", "trigger")),

    ("No deal leads to higher prices.",
     [("No deal", C, False, False, "higher prices")], ("active", "lead to")),
    ("No deal will not lead to higher prices.",
     [("No deal", C, True, False, "higher prices")], ("negated", "lead to")),
    ("The protests were led by no deal campaigners.",
     [("no deal campaigners", C, False, True, "The protests")], ("passive", "lead to")),
    # phrasal forms may not close an end-of-sentence construction; the plain
    # split then leaves an empty effect and the relation is skipped
    ("the chaos that no deal would lead to", [], ("end", "lead to")),

    ("No deal will result in food shortages.",
     [("No deal", C, False, False, "food shortages")], ("active", "result in")),
    ("Food shortages will result from no deal.",
     [("no deal", C, False, True, "Food shortages")], ("passive", "result in")),
    ("No deal won't result in shortages.",
     [("No deal", C, True, False, "shortages")], ("negated", "result in")),

    ("The shortages are due to no deal.",
     [("no deal", C, False, True, "The shortages")], ("passive", "due to")),
    ("A no deal exit is reason of the panic.",
     [("A no deal exit", C, False, False, "the panic")], ("active", "reason of")),

    # --- Creation ------------------------------------------------------------
    ("No deal will create new opportunities.",
     [("No deal", K, False, False, "new opportunities")], ("active", "create")),
    ("New opportunities will be created by no deal.",
     [("no deal", K, False, True, "New opportunities")], ("passive", "create")),
    ("No deal will not create jobs.",
     [("No deal", K, True, False, "jobs")], ("negated", "create")),
    ("the opportunities that no deal creates",
     [("no deal", K, False, False, "the opportunities")], ("end", "create")),

    ("No deal produces winners and losers.",
     [("No deal", K, False, False, "winners and losers")], ("active", "produce")),
    ("Winners and losers are produced by no deal.",
     [("no deal", K, False, True, "Winners and losers")], ("passive", "produce")),

    ("No deal would originate new trade disputes.",
     [("No deal", K, False, False, "new trade disputes")], ("active", "originate")),
    ("New disputes were originated by no deal.",
     [("no deal", K, False, True, "New disputes")], ("passive", "originate")),

    ("No deal will generate huge uncertainty.",
     [("No deal", K, False, False, "huge uncertainty")], ("active", "generate")),
    ("Huge uncertainty is generated by no deal.",
     [("no deal", K, False, True, "Huge uncertainty")], ("passive", "generate")),
    ("No deal cannot generate growth.",
     [("No deal", K, True, False, "growth")], ("negated", "generate")),
    ("the uncertainty that no deal generates",
     [("no deal", K, False, False, "the uncertainty")], ("end", "generate")),

    ("No deal will make Britain poorer.",
     [("No deal", K, False, False, "Britain poorer")], ("active", "make")),
    ("This mess was made by no deal.",
     [("no deal", K, False, True, "This mess")], ("passive", "make")),
    # "made poorer by" is not the passive form, so the bare active verb splits it
    ("Britain will be made poorer by no deal.",
     [("Britain", K, False, False, "poorer by no deal")], ("active", "make")),
    ("No deal won't make us richer.",
     [("No deal", K, True, False, "us richer")], ("negated", "make")),
    ("the mess that no deal would make",
     [("no deal", K, False, False, "the mess")], ("end", "make")),

    # --- coordination and relative clauses -------------------------------------
    ("No deal will destroy jobs and will kill the economy.",
     [("No deal", D, False, False, "jobs"), ("No deal", D, False, False, "the economy")],
     ("coordinated", "destroy", "kill")),
    ("No deal will kill farming, and it will destroy fishing.",
     [("No deal", D, False, False, "farming"), ("No deal", D, False, False, "fishing")],
     ("coordinated", "kill", "destroy")),
    ("No deal will cause chaos and will not create jobs.",
     [("No deal", C, False, False, "chaos"), ("No deal", K, True, False, "jobs")],
     ("coordinated", "negated", "cause", "create")),
    ("No deal will eliminate tariffs but also trigger a recession.",
     [("No deal", D, False, False, "tariffs"), ("No deal", C, False, False, "a recession")],
     ("coordinated", "eliminate", "trigger")),
    ("No deal would provoke anger and meanwhile generate debt.",
     [("No deal", C, False, False, "anger"), ("No deal", K, False, False, "debt")],
     ("coordinated", "provoke", "generate")),
    ("No deal will cause chaos which will destroy the NHS.",
     [("No deal", C, False, False, "chaos"), ("chaos", D, False, False, "the NHS")],
     ("which", "cause", "destroy")),

    # --- sentences without a relation ------------------------------------------
    ("I like tea", [], ()),
    ("No deal is a disaster.", [], ()),
    ("It kills.", [], ()),
]
