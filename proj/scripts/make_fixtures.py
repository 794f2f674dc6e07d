#!/usr/bin/env python3
"""Regenerate the bundled synthetic corpora under data/.

Each document is written as marker lines: mentions are bracketed as
[surface|CODE], and brackets may nest ([outer [inner|C1]|C2]). The script
strips the markers, computes codepoint offsets, and writes the .txt/.ann
pairs. Run from the repository root:

    python3 scripts/make_fixtures.py
"""

import pathlib

LABEL = "MORFOLOGIA"

TRAIN = {
    "tr01": [
        "Se observa [carcinoma ductal infiltrante|8500/3] en la mama derecha.",
        "La paciente con [carcinoma ductal infiltrante|8500/3] recibió quimioterapia adyuvante.",
        "El informe confirma [carcinoma epidermoide|8070/3] en el pulmón.",
        "Control posterior sin evidencia clara.",
        "La biopsia muestra [melanoma maligno|8720/3] en la piel dorsal.",
    ],
    "tr02": [
        "El estudio histológico revela [adenocarcinoma de próstata|8140/3] avanzado.",
        "Se describe [linfoma no Hodgkin|9591/3] en el ganglio cervical.",
        "La analítica indica [leucemia mieloide aguda|9861/3] en fase inicial.",
        "El paciente con [adenocarcinoma de próstata|8140/3] inició tratamiento dirigido.",
        "Se palpa [tumor carcinoide|8240/3] en el íleon terminal.",
    ],
    "tr03": [
        "La resonancia detectó [sarcoma de Ewing|9260/3] en el fémur izquierdo.",
        "El diagnóstico fue [carcinoma papilar de tiroides|8260/3] localizado.",
        "Se observa [carcinoma|8010/3] en la muestra analizada.",
        "El comité discutió la estrategia terapéutica completa.",
        "La citología sugiere [neoplasia maligna|8000/3] en el lavado peritoneal.",
    ],
    "tr04": [
        "Se extirpó [carcinoma ductal infiltrante|8500/3] mediante cirugía programada.",
        "El informe menciona [carcinoma epidermoide|8070/3] bien delimitado.",
        "La dermatóloga identificó [melanoma maligno|8720/3] en el brazo.",
        "Biopsia compatible con [adenocarcinoma de próstata|8140/3] incipiente.",
        "El seguimiento del [melanoma maligno|8720/3] continuó seis meses.",
    ],
    "tr05": [
        "Se diagnosticó [linfoma no Hodgkin|9591/3] tras el análisis medular.",
        "El frotis confirma [leucemia mieloide aguda|9861/3] con blastos abundantes.",
        "La endoscopia halló [tumor carcinoide|8240/3] en el apéndice.",
        "Se reseca [sarcoma de Ewing|9260/3] con márgenes amplios.",
        "La gammagrafía apoya [carcinoma papilar de tiroides|8260/3] residual.",
    ],
    "tr06": [
        "La pieza quirúrgica contiene [carcinoma de células escamosas de cabeza y cuello poco diferenciado de tipo infiltrante|8070/3] extenso.",
        "Se registró [carcinoma|8010/3] en la revisión rutinaria.",
        "El lavado mostró [neoplasia maligna|8001/3] persistente.",
        "La junta clínica valoró radioterapia paliativa urgente.",
        "Se observa [carcinoma ductal infiltrante|8500/3] multifocal bilateral.",
    ],
    "tr07": [
        "El control detecta [carcinoma epidermoide|8070/3] incipiente.",
        "La tomografía reveló [carcinoma epidermoide|8070/3] cavitado.",
        "Se confirma [melanoma maligno|8720/3] ulcerado en el talón.",
        "El tacto rectal sugiere [adenocarcinoma de próstata|8140/3] palpable.",
        "La médula presenta [leucemia mieloide aguda|9861/3] refractaria.",
    ],
    "tr08": [
        "Se identifica [linfoma no Hodgkin|9591/3] esplénico voluminoso.",
        "El octreoscan localiza [tumor carcinoide|8240/3] bronquial.",
        "La radiografía sospecha [sarcoma de Ewing|9260/3] costal.",
        "Punción compatible con [carcinoma papilar de tiroides|8260/3] quístico.",
        "El postoperatorio transcurrió sin complicaciones mayores.",
    ],
    "tr09": [
        "La necropsia documentó [carcinoma|8010/3] diseminado.",
        "Se describe [neoplasia maligna|8000/3] peritoneal difusa.",
        "El corte muestra [carcinoma ductal infiltrante|8500/3] junto a [carcinoma epidermoide|8070/3] sincrónico.",
        "Otra zona presenta [melanoma maligno|8720/3] junto a [carcinoma|8140/3] focal.",
        "El equipo programó revisión trimestral estricta.",
    ],
    "tr10": [
        "La laminilla exhibe [carcinoma de células escamosas de cabeza y cuello poco diferenciado de tipo infiltrante|8070/3] parcialmente necrosado.",
        "Se anota [neoplasia maligna|8001/3] dudosa en el margen.",
        "El resumen lista [carcinoma ductal infiltrante|8500/3] junto a [adenocarcinoma de próstata|8140/3] metacrónico.",
        "La consulta revisó [linfoma no Hodgkin|9591/3] junto a [leucemia mieloide aguda|9861/3] coexistentes.",
        "Informe final con [carcinoma epidermoide|8070/3] junto a [tumor carcinoide|8240/3] apendicular.",
    ],
}

# Dev surfaces come in three groups: exact copies of training surfaces,
# case variants of them, and single-edit typos.
DEV = {
    "dv01": [
        "Se observa [carcinoma epidermoide|8070/3] en la biopsia cutánea.",
        "La revisión describe [Carcinoma Ductal Infiltrante|8500/3] extenso.",
        "El frotis sugiere [leucemia mieloide agudda|9861/3] probable.",
    ],
    "dv02": [
        "El informe confirma [melanoma maligno|8720/3] superficial.",
        "Nota previa con [MELANOMA MALIGNO|8720/3] recurrente.",
        "Se anota [carcinoma epidermoida|8070/3] dudoso.",
    ],
    "dv03": [
        "La ecografía detecta [tumor carcinoide|8240/3] pequeño.",
        "Historial con [Linfoma no Hodgkin|9591/3] tratado.",
        "El tacto sugiere [adenocarcinoma de prostata|8140/3] palpable.",
    ],
    "dv04": [
        "La pieza contiene [carcinoma de células escamosas de cabeza y cuello poco diferenciado de tipo infiltrante|8070/3] residual.",
        "Se reseca [sarcoma de Ewings|9260/3] del fémur.",
        "El resumen lista [adenocarcinoma de próstata|8140/3] estable.",
    ],
}

TEST = {
    "ts01": [
        "Se observa [carcinoma ductal infiltrante|8500/3] bifocal.",
        "El control halló [melanoma maligno|8720/3] axilar.",
        "La junta revisó el plan completo.",
    ],
    "ts02": [
        "El informe describe [carcinoma epidermoide|8070/3] queratinizante.",
        "Se detecta [Adenocarcinoma de próstata|8140/3] incidental.",
        "La analítica apoya [leucemia mieloide aguda|9861/3] estable.",
    ],
    "ts03": [
        "La endoscopia encontró [tumor carcinoide|8240/3] gástrico.",
        "Se describe [linfoma no Hodgkin|9591/3] indolente.",
        "El resumen anota [carcinoma papilar de tiroydes|8260/3] mínimo.",
    ],
}

# Nested corpus: metastasis phrases carry an inner morphology mention.
NESTED = {
    "ns01": [
        "Se detecta [metástasis de [carcinoma epidermoide|8070/3]|8070/6] hepática.",
        "La biopsia confirma [carcinoma ductal infiltrante|8500/3] puro.",
        "El control siguió sin cambios relevantes.",
        "Se observa [metástasis de [melanoma maligno|8720/3]|8720/6] pulmonar.",
        "La endoscopia halló [tumor carcinoide|8240/3] duodenal.",
    ],
    "ns02": [
        "El escáner revela [metástasis de [carcinoma epidermoide|8070/3]|8070/6] ósea.",
        "Se registra [carcinoma epidermoide|8070/3] laríngeo.",
        "La junta valoró radioterapia local.",
        "Informe con [metástasis de [melanoma maligno|8720/3]|8720/6] cerebral.",
        "El seguimiento continuó mensualmente.",
    ],
    "ns03": [
        "La necropsia muestra [metástasis de [carcinoma epidermoide|8070/3]|8070/6] múltiple.",
        "Se extirpa [carcinoma ductal infiltrante|8500/3] temprano.",
        "El informe anota [melanoma maligno|8720/3] plantar.",
        "Se confirma [metástasis de [melanoma maligno|8720/3]|8720/6] ganglionar.",
        "La consulta revisó el historial completo.",
    ],
    "ns04": [
        "Se describe [metástasis de [carcinoma epidermoide|8070/3]|8070/6] suprarrenal.",
        "La pieza contiene [tumor carcinoide|8240/3] apendicular.",
        "El equipo programó seguimiento estrecho.",
        "Se halla [metástasis de [melanoma maligno|8720/3]|8720/6] esplénica.",
        "La citología sugiere [carcinoma epidermoide|8070/3] bronquial.",
    ],
    "ns05": [
        "El estudio localiza [metástasis de [carcinoma epidermoide|8070/3]|8070/6] renal.",
        "Se reseca [carcinoma ductal infiltrante|8500/3] izquierdo.",
        "La gammagrafía apoya [metástasis de [melanoma maligno|8720/3]|8720/6] vertebral.",
        "El postoperatorio transcurrió tranquilo.",
        "Se palpa [tumor carcinoide|8240/3] ileal.",
    ],
    "ns06": [
        "La resonancia detecta [metástasis de [carcinoma epidermoide|8070/3]|8070/6] pélvica.",
        "El informe lista [melanoma maligno|8720/3] lumbar.",
        "Se observa [metástasis de [melanoma maligno|8720/3]|8720/6] cutánea.",
        "La analítica permaneció estable semanas.",
        "Biopsia compatible con [carcinoma ductal infiltrante|8500/3] focal.",
    ],
    "ns07": [
        "Se anota [metástasis de [carcinoma epidermoide|8070/3]|8070/6] mediastínica.",
        "La ecografía halla [tumor carcinoide|8240/3] rectal.",
        "El comité discutió quimioterapia secuencial.",
        "Se registra [metástasis de [melanoma maligno|8720/3]|8720/6] axilar.",
        "La laminilla exhibe [carcinoma epidermoide|8070/3] basal.",
    ],
    "ns08": [
        "El corte documenta [metástasis de [carcinoma epidermoide|8070/3]|8070/6] pleural.",
        "Se identifica [carcinoma ductal infiltrante|8500/3] difuso.",
        "La revisión anotó [melanoma maligno|8720/3] acral.",
        "Informe final con [metástasis de [melanoma maligno|8720/3]|8720/6] hepática.",
        "El cultivo descartó infección concurrente.",
    ],
    "ns09": [
        "La tomografía sospecha [metástasis de [carcinoma epidermoide|8070/3]|8070/6] costal.",
        "Se vigila [tumor carcinoide|8240/3] bronquial.",
        "El control evidenció [metástasis de [melanoma maligno|8720/3]|8720/6] inguinal.",
        "La junta aprobó el protocolo nuevo.",
        "Se describe [carcinoma epidermoide|8070/3] gingival.",
    ],
    "ns10": [
        "El resumen recoge [metástasis de [carcinoma epidermoide|8070/3]|8070/6] tardía.",
        "Se confirma [carcinoma ductal infiltrante|8500/3] residual.",
        "La palpación encontró [metástasis de [melanoma maligno|8720/3]|8720/6] cervical.",
        "El equipo cerró el episodio clínico.",
        "La citología repite [melanoma maligno|8720/3] dudoso.",
    ],
}


def parse_markers(line, base):
    """Strip [surface|CODE] markers; return (plain_text, mentions)."""
    out = []
    mentions = []
    stack = []
    i = 0
    while i < len(line):
        c = line[i]
        if c == "[":
            stack.append(len(out))
            i += 1
        elif c == "|":
            j = line.index("]", i)
            code = line[i + 1 : j]
            start = stack.pop()
            end = len(out)
            surface = "".join(out[start:end])
            mentions.append((base + start, base + end, surface, code))
            i = j + 1
        else:
            out.append(c)
            i += 1
    assert not stack, f"unbalanced brackets in: {line}"
    return "".join(out), mentions


def emit(dirpath, docs):
    dirpath.mkdir(parents=True, exist_ok=True)
    sentences = 0
    mention_total = 0
    for doc_id, lines in sorted(docs.items()):
        text_parts = []
        mentions = []
        offset = 0
        for line in lines:
            plain, found = parse_markers(line, offset)
            assert ". " not in plain.rstrip(".") + " ", doc_id
            text_parts.append(plain)
            mentions.extend(found)
            offset += len(plain) + 1  # the joining newline
            sentences += 1
        text = "\n".join(text_parts) + "\n"
        for start, end, surface, _ in mentions:
            assert text[start:end] == surface, (doc_id, surface)
        mentions.sort(key=lambda m: (m[0], m[1]))
        ann_lines = []
        for idx, (start, end, surface, code) in enumerate(mentions, 1):
            ann_lines.append(f"T{idx}\t{LABEL} {start} {end}\t{surface}")
            ann_lines.append(f"#{idx}\tAnnotatorNotes T{idx}\t{code}")
        (dirpath / f"{doc_id}.txt").write_text(text, encoding="utf-8")
        (dirpath / f"{doc_id}.ann").write_text(
            "\n".join(ann_lines) + ("\n" if ann_lines else ""), encoding="utf-8"
        )
        mention_total += len(mentions)
    return sentences, mention_total


def main():
    root = pathlib.Path(__file__).resolve().parent.parent / "data"
    for name, docs in [
        ("synthetic/train", TRAIN),
        ("synthetic/dev", DEV),
        ("synthetic/test", TEST),
        ("nested/train", NESTED),
    ]:
        sentences, mentions = emit(root / name, docs)
        print(f"{name}: {len(docs)} docs, {sentences} sentences, {mentions} mentions")
    assert sum(len(v) for v in TRAIN.values()) == 50
    assert sum(len(v) for v in NESTED.values()) == 50


if __name__ == "__main__":
    main()
