#include "dynspace/taxonomy.hpp"

#include "dynspace/error.hpp"

#include <algorithm>

namespace dynspace {

IntegrationReport evaluate_taxonomy(const ProjectTaxonomy& project) {
    if (project.categories.empty()) throw Error(ErrorKind::InvalidArgument, "empty category set: " + project.doc_id);
    if (project.members.empty()) throw Error(ErrorKind::InvalidArgument, "project without members: " + project.doc_id);
    IntegrationReport r;
    r.n_categories = project.categories.size();
    r.n_members = project.members.size();
    for (const auto& c : project.categories) {
        std::size_t touched = 0;
        for (const auto& m : project.members) touched += m.prior_categories.count(c);
        r.integration_hits += touched;
        if (touched == 0) ++r.speculated;
    }
    r.integration = static_cast<double>(r.integration_hits) / static_cast<double>(r.n_categories * r.n_members);
    r.speculation = static_cast<double>(r.speculated) / static_cast<double>(r.n_categories);
    return r;
}

double integration(const ProjectTaxonomy& project) { return evaluate_taxonomy(project).integration; }

double speculation(const ProjectTaxonomy& project) { return evaluate_taxonomy(project).speculation; }

ProjectTaxonomy project_taxonomy(const Corpus& corpus, const SlicedCorpus& sliced, std::size_t doc_index,
                                 std::size_t lookback) {
    const auto& doc = corpus.doc(doc_index);
    const auto t = sliced.slice_of(doc_index);
    if (!t) throw Error(ErrorKind::InvalidArgument, "document outside the sliced span: " + doc.doc_id);
    ProjectTaxonomy p;
    p.doc_id = doc.doc_id;
    p.categories.insert(doc.categories.begin(), doc.categories.end());
    std::vector<std::string> listed = doc.creator_ids;
    std::sort(listed.begin(), listed.end());
    listed.erase(std::unique(listed.begin(), listed.end()), listed.end());
    for (const auto& id : listed) {
        MemberHistory m;
        m.creator_id = id;
        for (std::size_t i : creator_history(sliced, id, *t, lookback)) {
            const auto& cats = corpus.doc(i).categories;
            m.prior_categories.insert(cats.begin(), cats.end());
        }
        p.members.push_back(std::move(m));
    }
    return p;
}

}  // namespace dynspace
